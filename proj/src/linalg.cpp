#include "mtdl/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace mtdl {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionError("matrix value count " + std::to_string(values_.size()) +
                         " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw DimensionError("ragged row list");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Matrix Matrix::cols_range(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw DimensionError("column range out of bounds");
  Matrix out(rows_, count);
  std::copy(values_.begin() + static_cast<std::ptrdiff_t>(first * rows_),
            values_.begin() + static_cast<std::ptrdiff_t>((first + count) * rows_),
            out.values_.begin());
  return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> which) const {
  Matrix out(rows_, which.size());
  for (std::size_t k = 0; k < which.size(); ++k) {
    if (which[k] >= cols_) throw DimensionError("column index out of bounds");
    auto src = col(which[k]);
    std::copy(src.begin(), src.end(), out.col(k).begin());
  }
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> which) const {
  Matrix out(which.size(), cols_);
  for (std::size_t k = 0; k < which.size(); ++k) {
    if (which[k] >= rows_) throw DimensionError("row index out of bounds");
    for (std::size_t c = 0; c < cols_; ++c) out(k, c) = (*this)(which[k], c);
  }
  return out;
}

void check_feature_matrix(const Matrix& m, const std::string& what) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw DimensionError(what + ": feature matrix must have at least one row and one column");
  }
  for (double v : m.values()) {
    if (!std::isfinite(v)) throw DimensionError(what + ": non-finite entry");
  }
}

SparseCode::SparseCode(std::size_t length, std::vector<std::size_t> indices,
                       std::vector<double> values)
    : length_(length) {
  if (indices.size() != values.size()) throw DimensionError("index/value count mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= length) throw DimensionError("sparse index out of range");
    if (k > 0 && indices[k] <= indices[k - 1]) {
      throw DimensionError("sparse indices must be strictly increasing");
    }
    if (values[k] != 0.0) {
      indices_.push_back(indices[k]);
      values_.push_back(values[k]);
    }
  }
}

SparseCode SparseCode::from_dense(std::span<const double> dense) {
  SparseCode out(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      out.indices_.push_back(i);
      out.values_.push_back(dense[i]);
    }
  }
  return out;
}

std::vector<double> SparseCode::to_dense() const {
  std::vector<double> out(length_, 0.0);
  for (std::size_t k = 0; k < indices_.size(); ++k) out[indices_[k]] = values_[k];
  return out;
}

double SparseCode::at(std::size_t i) const {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), i);
  if (it == indices_.end() || *it != i) return 0.0;
  return values_[static_cast<std::size_t>(it - indices_.begin())];
}

double SparseCode::l1_norm() const {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s;
}

std::vector<double> sparse_mul(const Matrix& a, const SparseCode& b) {
  if (a.cols() != b.length()) {
    throw DimensionError("sparse_mul: matrix has " + std::to_string(a.cols()) +
                         " columns, code has length " + std::to_string(b.length()));
  }
  std::vector<double> out(a.rows(), 0.0);
  auto idx = b.indices();
  auto val = b.values();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto column = a.col(idx[k]);
    const double w = val[k];
    for (std::size_t r = 0; r < out.size(); ++r) out[r] += column[r] * w;
  }
  return out;
}

void sparse_mul(const Matrix& a, std::span<const double> coef,
                std::span<const std::size_t> support, std::span<double> out) {
  if (coef.size() != a.cols() || out.size() != a.rows()) {
    throw DimensionError("sparse_mul: shape mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j : support) {
    auto column = a.col(j);
    const double w = coef[j];
    for (std::size_t r = 0; r < out.size(); ++r) out[r] += column[r] * w;
  }
}

std::vector<double> dense_mul(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw DimensionError("dense_mul: shape mismatch");
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t c = 0; c < a.cols(); ++c) {
    auto column = a.col(c);
    for (std::size_t r = 0; r < out.size(); ++r) out[r] += column[r] * x[c];
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace mtdl
