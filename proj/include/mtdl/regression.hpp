#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtdl/linalg.hpp"

namespace mtdl {

enum class RegressionMethod { Lasso, Ridge };

RegressionMethod parse_regression_method(const std::string& name);
std::string to_string(RegressionMethod method);

/// Linear model fitted on standardized columns. Columns with zero variance in
/// the training design are dropped and carry weight 0.
struct RegressionModel {
  /// Weights on the standardized scale.
  std::vector<double> coef;
  std::vector<double> col_mean;
  /// Population standard deviation per column; 0 marks a dropped column.
  std::vector<double> col_scale;
  double y_mean = 0.0;
  /// Set when the targets were constant and only the mean was fitted.
  bool intercept_only = false;
  /// Coordinate-descent sweeps used (0 for closed-form fits).
  int sweeps = 0;

  /// Weights on the original column scale.
  std::vector<double> weights() const;
  double intercept() const;
};

/// Minimizes (1/2n) ||y - X w||^2 + lambda ||w||_1 on the standardized problem
/// by cyclic coordinate descent until the largest weight change is < 1e-8 or
/// 10^4 sweeps have run.
RegressionModel lasso_fit(const Matrix& x, std::span<const double> y, double lambda);

/// Solves (Xs^T Xs + n lambda I) w = Xs^T yc on the standardized problem.
RegressionModel ridge_fit(const Matrix& x, std::span<const double> y, double lambda);

RegressionModel fit(const Matrix& x, std::span<const double> y, RegressionMethod method,
                    double lambda);

std::vector<double> predict(const RegressionModel& model, const Matrix& x);

/// The standardized design Xs and centered target used by the fitters.
struct Standardized {
  Matrix x;
  std::vector<double> y;
  std::vector<double> col_mean;
  std::vector<double> col_scale;
  double y_mean = 0.0;
};

Standardized standardize(const Matrix& x, std::span<const double> y);

struct CvReport {
  std::vector<double> grid;
  /// Mean validation rMSE across folds, one per grid value.
  std::vector<double> mean_rmse;
  double chosen = 0.0;
  std::size_t chosen_index = 0;
  std::size_t folds = 0;
};

/// 13 log-spaced values from 1e-3 to 1e3.
std::vector<double> default_lambda_grid();

/// Seeded shuffle, then contiguous folds. The chosen value minimizes mean
/// validation rMSE; exact ties go to the largest lambda.
CvReport cross_validate(const Matrix& x, std::span<const double> y, RegressionMethod method,
                        std::size_t folds, std::span<const double> grid, std::uint64_t seed);

}  // namespace mtdl
