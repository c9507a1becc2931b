#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mtdl/linalg.hpp"

namespace mtdl {

/// Hyperparameters of multi-task stochastic coordinate coding. Batch size is
/// always one sample.
struct MsccConfig {
  double lambda = 0.1;
  int epochs = 10;
  /// Passes over every code coordinate per sample (builds the index set).
  int ccd_full_passes = 1;
  /// Passes restricted to the index set per sample.
  int ccd_support_passes = 3;
  std::size_t shared_atoms = 0;
  /// One entry per task.
  std::vector<std::size_t> individual_atoms;
  std::uint64_t seed = 0;
  /// Shuffle each task's sample order every epoch (seeded).
  bool shuffle_samples = false;

  /// Throws DimensionError on an invalid setting for `tasks` tasks.
  void validate(std::size_t tasks) const;
};

/// D_t = [shared block | individual block]. Columns [0, shared_cols) are the
/// shared atoms. Every column lies in the unit ball.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(Matrix atoms, std::size_t shared_cols);

  std::size_t dim() const { return atoms_.rows(); }
  std::size_t shared_cols() const { return shared_cols_; }
  std::size_t individual_cols() const { return atoms_.cols() - shared_cols_; }
  std::size_t total_cols() const { return atoms_.cols(); }

  const Matrix& atoms() const { return atoms_; }
  Matrix& atoms() { return atoms_; }

  Matrix shared_block() const { return atoms_.cols_range(0, shared_cols_); }
  Matrix individual_block() const { return atoms_.cols_range(shared_cols_, individual_cols()); }
  void set_shared_block(const Matrix& phi);

  bool operator==(const Dictionary&) const = default;

 private:
  Matrix atoms_;
  std::size_t shared_cols_ = 0;
};

/// Mutable training state threaded through every sample.
struct TrainerState {
  Matrix phi;
  /// Diagonal of each task's accumulated Hessian, sum of z_mu^2.
  std::vector<std::vector<double>> hessian_diag;
  int epoch = 0;
};

using CodeMatrix = std::vector<SparseCode>;

struct TrainResult {
  std::vector<Dictionary> dictionaries;
  /// Last code computed for every sample of every task.
  std::vector<CodeMatrix> codes;
  /// Objective value at the end of each epoch.
  std::vector<double> objective_trace;
  TrainerState state;
};

/// Random-patch initialization. The shared block draws shared_atoms columns
/// from the pooled samples of all tasks, each individual block draws from its
/// own task; columns are scaled to unit norm. Zero columns are skipped.
std::vector<Dictionary> init_dictionaries(std::span<const FeatureMatrix> tasks,
                                          const MsccConfig& config);

/// Sparse-code update for one sample: `full_passes` sweeps over all atoms then
/// `support_passes` sweeps over the resulting index set.
SparseCode update_sparse_code(const Dictionary& dict, std::span<const double> x,
                              const SparseCode& z, double lambda, int full_passes,
                              int support_passes);

inline SparseCode update_sparse_code(const Dictionary& dict, std::span<const double> x,
                                     const SparseCode& z, const MsccConfig& config) {
  return update_sparse_code(dict, x, z, config.lambda, config.ccd_full_passes,
                            config.ccd_support_passes);
}

/// One SGD step on the atoms active in `z`, learning rate 1/H(mu, mu), followed
/// by projection of those atoms onto the unit ball. `hessian_diag` is the
/// task's Hessian diagonal and is accumulated in place.
void update_dictionary(Dictionary& dict, std::span<const double> x, const SparseCode& z,
                       std::span<double> hessian_diag);

/// Observer called at the end of each epoch with (epoch, objective).
using EpochCallback = std::function<void(int, double)>;

TrainResult train(std::span<const FeatureMatrix> tasks, const MsccConfig& config,
                  const EpochCallback& on_epoch = {});

/// sum_t 1/2 ||X_t - D_t Z_t||_F^2 + lambda sum_t ||Z_t||_1
double objective(std::span<const FeatureMatrix> tasks, std::span<const Dictionary> dictionaries,
                 std::span<const CodeMatrix> codes, double lambda);

/// Largest column norm over the whole dictionary.
double max_column_norm(const Matrix& atoms);

}  // namespace mtdl
