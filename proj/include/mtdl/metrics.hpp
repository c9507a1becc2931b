#pragma once

#include <span>
#include <string>
#include <vector>

namespace mtdl {

/// Ground truth and predictions for several regression tasks.
struct MultiTaskEval {
  std::vector<std::vector<double>> truth;
  std::vector<std::vector<double>> pred;

  void add_task(std::vector<double> y, std::vector<double> yhat);
  std::size_t task_count() const { return truth.size(); }
};

enum class StdKind { Population, Sample };

StdKind parse_std_kind(const std::string& name);
std::string to_string(StdKind kind);

double mean(std::span<const double> v);
double stddev(std::span<const double> v, StdKind kind);

/// sqrt(||y - yhat||^2 / n)
double rmse(std::span<const double> y, std::span<const double> yhat);

/// Pearson correlation; throws if either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

/// sum_i ||Y_i - Yhat_i||^2 / sigma(Y_i), divided by sum_i n_i.
double nmse(const MultiTaskEval& eval, StdKind sigma = StdKind::Population);

/// sum_i Corr(Y_i, Yhat_i) n_i / sum_i n_i
double weighted_corr(const MultiTaskEval& eval);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and sample standard deviation of at least two trial values.
MeanStd aggregate(std::span<const double> trials);

}  // namespace mtdl
