#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtdl {

/// Raised when operand shapes disagree or an argument violates a precondition.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense column-major matrix of doubles. A column is contiguous, so one
/// patch feature vector (or one dictionary atom) is a single span.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);
  /// Builds from row-major nested lists; convenient for small literals.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[c * rows_ + r]; }

  std::span<double> col(std::size_t c) { return {values_.data() + c * rows_, rows_}; }
  std::span<const double> col(std::size_t c) const { return {values_.data() + c * rows_, rows_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  /// Copies columns [first, first + count) into a new matrix.
  Matrix cols_range(std::size_t first, std::size_t count) const;
  /// Copies the listed columns, in the given order.
  Matrix select_cols(std::span<const std::size_t> which) const;
  /// Copies the listed rows, in the given order.
  Matrix select_rows(std::span<const std::size_t> which) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// A task's p x n patch matrix; one column per patch.
using FeatureMatrix = Matrix;

/// Throws DimensionError unless `m` has at least one row and column and only
/// finite entries.
void check_feature_matrix(const Matrix& m, const std::string& what);

/// Sparse vector with an explicit ascending index set of its nonzeros.
class SparseCode {
 public:
  SparseCode() = default;
  explicit SparseCode(std::size_t length) : length_(length) {}
  /// Indices must be strictly increasing and < length; zero values are dropped.
  SparseCode(std::size_t length, std::vector<std::size_t> indices, std::vector<double> values);

  static SparseCode from_dense(std::span<const double> dense);
  std::vector<double> to_dense() const;

  std::size_t length() const { return length_; }
  std::size_t nnz() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::span<const std::size_t> indices() const { return indices_; }
  std::span<const double> values() const { return values_; }

  /// Value at position i (zero when i is not in the index set).
  double at(std::size_t i) const;
  double l1_norm() const;

  bool operator==(const SparseCode&) const = default;

 private:
  std::size_t length_ = 0;
  std::vector<std::size_t> indices_;
  std::vector<double> values_;
};

/// sign(x) * max(|x| - phi, 0)
inline double soft_threshold(double x, double phi) {
  if (x > phi) return x - phi;
  if (x < -phi) return x + phi;
  return 0.0;
}

/// A * b touching only the columns of A selected by b's index set.
std::vector<double> sparse_mul(const Matrix& a, const SparseCode& b);

/// Same as above for a dense coefficient vector whose nonzeros are listed in
/// `support` (ascending). Entries of `coef` outside `support` are ignored.
void sparse_mul(const Matrix& a, std::span<const double> coef,
                std::span<const std::size_t> support, std::span<double> out);

/// Plain dense A * x.
std::vector<double> dense_mul(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

}  // namespace mtdl
