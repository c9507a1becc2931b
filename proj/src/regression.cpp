#include "mtdl/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mtdl/metrics.hpp"

namespace mtdl {

namespace {

constexpr double kLassoTol = 1e-8;
constexpr int kLassoMaxSweeps = 10000;

void check_design(const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) {
    throw DimensionError("design has " + std::to_string(x.rows()) + " rows, targets have " +
                         std::to_string(y.size()));
  }
  if (x.rows() < 2) throw DimensionError("regression needs at least 2 samples");
  for (double v : x.values()) {
    if (!std::isfinite(v)) throw DimensionError("design matrix has a non-finite entry");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DimensionError("targets have a non-finite entry");
  }
}

bool constant_targets(std::span<const double> centered) {
  return std::all_of(centered.begin(), centered.end(), [](double v) { return v == 0.0; });
}

RegressionModel empty_model(const Standardized& s) {
  RegressionModel m;
  m.coef.assign(s.x.cols(), 0.0);
  m.col_mean = s.col_mean;
  m.col_scale = s.col_scale;
  m.y_mean = s.y_mean;
  return m;
}

// In-place Cholesky solve of the SPD system a w = b (a is overwritten).
std::vector<double> cholesky_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) throw DimensionError("ridge system is not positive definite");
    const double l = std::sqrt(d);
    a(j, j) = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
    b[i] = s / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a(k, i) * b[k];
    b[i] = s / a(i, i);
  }
  return b;
}

}  // namespace

RegressionMethod parse_regression_method(const std::string& name) {
  if (name == "lasso") return RegressionMethod::Lasso;
  if (name == "ridge") return RegressionMethod::Ridge;
  throw DimensionError("unknown regression method '" + name + "' (expected lasso or ridge)");
}

std::string to_string(RegressionMethod method) {
  return method == RegressionMethod::Lasso ? "lasso" : "ridge";
}

std::vector<double> RegressionModel::weights() const {
  std::vector<double> w(coef.size(), 0.0);
  for (std::size_t j = 0; j < coef.size(); ++j) {
    if (col_scale[j] > 0.0) w[j] = coef[j] / col_scale[j];
  }
  return w;
}

double RegressionModel::intercept() const {
  double b = y_mean;
  auto w = weights();
  for (std::size_t j = 0; j < w.size(); ++j) b -= w[j] * col_mean[j];
  return b;
}

Standardized standardize(const Matrix& x, std::span<const double> y) {
  const std::size_t n = x.rows();
  const auto nd = static_cast<double>(n);
  Standardized s;
  s.x = Matrix(n, x.cols());
  s.col_mean.assign(x.cols(), 0.0);
  s.col_scale.assign(x.cols(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto src = x.col(j);
    const double mean = std::accumulate(src.begin(), src.end(), 0.0) / nd;
    double ss = 0.0;
    for (double v : src) ss += (v - mean) * (v - mean);
    const double scale = std::sqrt(ss / nd);
    s.col_mean[j] = mean;
    // Rounding in the mean leaves tiny spread on constant columns.
    if (scale <= 1e-12 * std::max(1.0, std::abs(mean))) continue;
    s.col_scale[j] = scale;
    auto dst = s.x.col(j);
    for (std::size_t i = 0; i < n; ++i) dst[i] = (src[i] - mean) / scale;
  }
  s.y_mean = std::accumulate(y.begin(), y.end(), 0.0) / nd;
  s.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.y[i] = y[i] - s.y_mean;
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
    std::fill(s.y.begin(), s.y.end(), 0.0);
    s.y_mean = y.front();
  }
  return s;
}

RegressionModel lasso_fit(const Matrix& x, std::span<const double> y, double lambda) {
  check_design(x, y);
  if (!(lambda >= 0.0)) throw DimensionError("lasso lambda must be nonnegative");
  Standardized s = standardize(x, y);
  RegressionModel model = empty_model(s);
  if (constant_targets(s.y)) {
    model.intercept_only = true;
    return model;
  }
  const auto nd = static_cast<double>(x.rows());
  std::vector<double> residual = s.y;
  for (int sweep = 1; sweep <= kLassoMaxSweeps; ++sweep) {
    double largest = 0.0;
    for (std::size_t j = 0; j < s.x.cols(); ++j) {
      if (s.col_scale[j] == 0.0) continue;
      auto column = s.x.col(j);
      // Standardized columns have ||x_j||^2 / n = 1.
      const double rho = dot(column, residual) / nd + model.coef[j];
      const double updated = soft_threshold(rho, lambda);
      const double delta = updated - model.coef[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= delta * column[i];
        model.coef[j] = updated;
      }
      largest = std::max(largest, std::abs(delta));
    }
    model.sweeps = sweep;
    if (largest < kLassoTol) break;
  }
  return model;
}

RegressionModel ridge_fit(const Matrix& x, std::span<const double> y, double lambda) {
  check_design(x, y);
  if (!(lambda >= 0.0)) throw DimensionError("ridge lambda must be nonnegative");
  Standardized s = standardize(x, y);
  RegressionModel model = empty_model(s);
  if (constant_targets(s.y)) {
    model.intercept_only = true;
    return model;
  }
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < s.x.cols(); ++j) {
    if (s.col_scale[j] > 0.0) kept.push_back(j);
  }
  if (kept.empty()) return model;
  const auto nd = static_cast<double>(x.rows());
  const std::size_t k = kept.size();
  Matrix gram(k, k);
  std::vector<double> rhs(k);
  for (std::size_t a = 0; a < k; ++a) {
    auto ca = s.x.col(kept[a]);
    rhs[a] = dot(ca, s.y);
    for (std::size_t b = 0; b <= a; ++b) {
      const double v = dot(ca, s.x.col(kept[b]));
      gram(a, b) = v;
      gram(b, a) = v;
    }
    gram(a, a) += nd * lambda;
  }
  std::vector<double> w = cholesky_solve(std::move(gram), std::move(rhs));
  for (std::size_t a = 0; a < k; ++a) model.coef[kept[a]] = w[a];
  return model;
}

RegressionModel fit(const Matrix& x, std::span<const double> y, RegressionMethod method,
                    double lambda) {
  return method == RegressionMethod::Lasso ? lasso_fit(x, y, lambda) : ridge_fit(x, y, lambda);
}

std::vector<double> predict(const RegressionModel& model, const Matrix& x) {
  if (x.cols() != model.coef.size()) {
    throw DimensionError("predict: design has " + std::to_string(x.cols()) +
                         " columns, model has " + std::to_string(model.coef.size()));
  }
  std::vector<double> out(x.rows(), model.y_mean);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (model.col_scale[j] == 0.0 || model.coef[j] == 0.0) continue;
    auto column = x.col(j);
    const double w = model.coef[j] / model.col_scale[j];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * (column[i] - model.col_mean[j]);
  }
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 12; ++k) grid.push_back(std::pow(10.0, -3.0 + 0.5 * k));
  return grid;
}

CvReport cross_validate(const Matrix& x, std::span<const double> y, RegressionMethod method,
                        std::size_t folds, std::span<const double> grid, std::uint64_t seed) {
  check_design(x, y);
  if (folds < 2) throw DimensionError("cross-validation needs at least 2 folds");
  if (grid.empty()) throw DimensionError("cross-validation grid is empty");
  const std::size_t n = x.rows();
  if (n < folds) {
    throw DimensionError("cross-validation fold would be empty: " + std::to_string(n) +
                         " samples for " + std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  CvReport report;
  report.grid.assign(grid.begin(), grid.end());
  report.folds = folds;
  report.mean_rmse.assign(grid.size(), 0.0);

  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * n / folds;
    const std::size_t hi = (f + 1) * n / folds;
    std::vector<std::size_t> train_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(lo));
    train_rows.insert(train_rows.end(), perm.begin() + static_cast<std::ptrdiff_t>(hi), perm.end());
    std::vector<std::size_t> valid_rows(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                                        perm.begin() + static_cast<std::ptrdiff_t>(hi));
    if (train_rows.size() < 2) throw DimensionError("cross-validation training fold too small");
    Matrix xt = x.select_rows(train_rows);
    Matrix xv = x.select_rows(valid_rows);
    std::vector<double> yt, yv;
    for (auto i : train_rows) yt.push_back(y[i]);
    for (auto i : valid_rows) yv.push_back(y[i]);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      report.mean_rmse[g] += rmse(yv, predict(fit(xt, yt, method, grid[g]), xv));
    }
  }
  for (double& v : report.mean_rmse) v /= static_cast<double>(folds);

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double a = report.mean_rmse[g];
    const double b = report.mean_rmse[best];
    if (a < b || (a == b && grid[g] > grid[best])) best = g;
  }
  report.chosen_index = best;
  report.chosen = grid[best];
  return report;
}

}  // namespace mtdl
