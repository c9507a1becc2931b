#include "mtdl/metrics.hpp"

#include <cmath>
#include <numeric>

#include "mtdl/linalg.hpp"

namespace mtdl {

void MultiTaskEval::add_task(std::vector<double> y, std::vector<double> yhat) {
  if (y.size() != yhat.size()) throw DimensionError("truth and prediction lengths differ");
  if (y.empty()) throw DimensionError("task has no samples");
  truth.push_back(std::move(y));
  pred.push_back(std::move(yhat));
}

StdKind parse_std_kind(const std::string& name) {
  if (name == "population") return StdKind::Population;
  if (name == "sample") return StdKind::Sample;
  throw DimensionError("unknown std kind '" + name + "' (expected population or sample)");
}

std::string to_string(StdKind kind) { return kind == StdKind::Population ? "population" : "sample"; }

double mean(std::span<const double> v) {
  if (v.empty()) throw DimensionError("mean of empty vector");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v, StdKind kind) {
  const std::size_t denom = kind == StdKind::Population ? v.size() : v.size() - 1;
  if (v.empty() || denom == 0) throw DimensionError("too few values for a standard deviation");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(denom));
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw DimensionError("rmse: length mismatch");
  if (y.empty()) throw DimensionError("rmse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) ss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return std::sqrt(ss / static_cast<double>(y.size()));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("correlation: length mismatch");
  if (a.size() < 2) throw DimensionError("correlation needs at least 2 samples");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DimensionError("correlation of a zero-variance vector");
  return sab / std::sqrt(saa * sbb);
}

namespace {
void check_eval(const MultiTaskEval& eval) {
  if (eval.truth.empty()) throw DimensionError("evaluation has no tasks");
  if (eval.truth.size() != eval.pred.size()) throw DimensionError("task count mismatch");
  for (std::size_t i = 0; i < eval.truth.size(); ++i) {
    if (eval.truth[i].size() != eval.pred[i].size() || eval.truth[i].empty()) {
      throw DimensionError("task " + std::to_string(i) + ": truth/prediction length mismatch");
    }
  }
}
}  // namespace

double nmse(const MultiTaskEval& eval, StdKind sigma) {
  check_eval(eval);
  double num = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < eval.task_count(); ++i) {
    const auto& y = eval.truth[i];
    const auto& yhat = eval.pred[i];
    const double s = stddev(y, sigma);
    if (s == 0.0) throw DimensionError("nmse undefined: task " + std::to_string(i) + " is constant");
    double ss = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) ss += (y[k] - yhat[k]) * (y[k] - yhat[k]);
    num += ss / s;
    count += y.size();
  }
  return num / static_cast<double>(count);
}

double weighted_corr(const MultiTaskEval& eval) {
  check_eval(eval);
  double num = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < eval.task_count(); ++i) {
    const auto n = eval.truth[i].size();
    num += pearson(eval.truth[i], eval.pred[i]) * static_cast<double>(n);
    count += n;
  }
  return num / static_cast<double>(count);
}

MeanStd aggregate(std::span<const double> trials) {
  if (trials.size() < 2) throw DimensionError("aggregate needs at least 2 trials");
  return {mean(trials), stddev(trials, StdKind::Sample)};
}

}  // namespace mtdl
