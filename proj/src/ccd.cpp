#include "mtdl/ccd.hpp"

#include <algorithm>
#include <cmath>

namespace mtdl {

CoordinateCoder::CoordinateCoder(const Matrix& dict, std::span<const double> x,
                                 const SparseCode& start, double lambda)
    : dict_(dict), x_(x), lambda_(lambda), z_(start.to_dense()), residual_(dict.rows()) {
  if (x.size() != dict.rows()) {
    throw DimensionError("sample length " + std::to_string(x.size()) +
                         " does not match dictionary rows " + std::to_string(dict.rows()));
  }
  if (start.length() != dict.cols()) {
    throw DimensionError("code length " + std::to_string(start.length()) +
                         " does not match dictionary columns " + std::to_string(dict.cols()));
  }
  support_.assign(start.indices().begin(), start.indices().end());
  sparse_mul(dict_, z_, support_, residual_);
  for (std::size_t r = 0; r < residual_.size(); ++r) residual_[r] -= x_[r];
}

double CoordinateCoder::step(std::size_t j) {
  auto atom = dict_.col(j);
  const double g = dot(atom, residual_);
  const double updated = soft_threshold(z_[j] - g, lambda_);
  const double delta = updated - z_[j];
  if (delta != 0.0) {
    for (std::size_t r = 0; r < residual_.size(); ++r) residual_[r] += delta * atom[r];
    z_[j] = updated;
  }
  return std::abs(delta);
}

double CoordinateCoder::full_pass() {
  double largest = 0.0;
  support_.clear();
  for (std::size_t j = 0; j < z_.size(); ++j) {
    largest = std::max(largest, step(j));
    if (z_[j] != 0.0) support_.push_back(j);
  }
  return largest;
}

double CoordinateCoder::support_pass() {
  double largest = 0.0;
  for (std::size_t j : support_) largest = std::max(largest, step(j));
  return largest;
}

SparseCode CoordinateCoder::code() const { return SparseCode::from_dense(z_); }

}  // namespace mtdl
