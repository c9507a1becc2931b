#pragma once

#include <span>
#include <vector>

#include "mtdl/linalg.hpp"

namespace mtdl {

/// Cyclic coordinate descent on one sample's subproblem
///
///   min_z  1/2 ||x - D z||^2 + lambda ||z||_1
///
/// Each coordinate step is z_j <- soft_threshold(z_j - D_j^T (D z - x), lambda)
/// and sees the values just written for earlier coordinates. The residual
/// D z - x is kept current so a step costs O(p) instead of a fresh product.
class CoordinateCoder {
 public:
  CoordinateCoder(const Matrix& dict, std::span<const double> x, const SparseCode& start,
                  double lambda);

  /// Visits every coordinate in ascending order and rebuilds the index set
  /// from the coordinates left nonzero. Returns the largest |change|.
  double full_pass();
  /// Visits only the index set recorded by the last full pass.
  double support_pass();

  SparseCode code() const;
  std::span<const std::size_t> support() const { return support_; }
  /// Current D z - x.
  std::span<const double> residual() const { return residual_; }

 private:
  double step(std::size_t j);

  const Matrix& dict_;
  std::span<const double> x_;
  double lambda_;
  std::vector<double> z_;
  std::vector<double> residual_;
  std::vector<std::size_t> support_;
};

}  // namespace mtdl
