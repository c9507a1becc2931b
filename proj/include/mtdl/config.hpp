#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtdl/encode.hpp"
#include "mtdl/metrics.hpp"
#include "mtdl/mscc.hpp"
#include "mtdl/regression.hpp"

namespace mtdl {

/// Planted multi-task dictionary model used to generate verifiable data.
struct SyntheticSpec {
  std::size_t tasks = 3;
  std::size_t dim = 32;
  std::size_t shared_atoms = 8;
  /// One entry per task, or a single entry applied to every task.
  std::vector<std::size_t> individual_atoms{8};
  /// Nonzeros per planted code.
  std::size_t sparsity = 3;
  /// Patches per task.
  std::size_t samples = 2000;
  /// Subjects, shared by every task; patches are split evenly among them.
  std::size_t subjects = 100;
  double noise = 0.01;
  /// Standard deviation of the noise added to each target.
  double target_noise = 0.05;
  /// Nonzero weights in each task's target function.
  std::size_t target_sparsity = 4;
  std::uint64_t seed = 0;

  std::size_t individual_for(std::size_t task) const;
  void validate() const;
};

/// Dictionary shape for the learning stage.
enum class DictionaryMode {
  /// Shared and per-task blocks learned jointly.
  Mscc,
  /// One shared-only dictionary learned on all tasks' patches pooled.
  Baseline,
};

/// How the per-task pooled features become the regression design.
enum class FeatureMode { Concat, Last };

DictionaryMode parse_dictionary_mode(const std::string& name);
std::string to_string(DictionaryMode mode);
FeatureMode parse_feature_mode(const std::string& name);
std::string to_string(FeatureMode mode);

struct ExperimentConfig {
  /// Task patch matrices; empty means synthetic data.
  std::vector<std::string> task_files;
  std::vector<std::string> grouping_files;
  std::string targets_file;
  SyntheticSpec synthetic;
  /// When false the synthetic seed follows the master seed.
  bool synthetic_seed_set = false;

  MsccConfig mscc{.shared_atoms = 8, .individual_atoms = {8}};
  DictionaryMode mode = DictionaryMode::Mscc;
  PoolMode pool = PoolMode::AbsMax;
  FeatureMode features = FeatureMode::Concat;
  RegressionMethod regression = RegressionMethod::Lasso;
  std::size_t cv_folds = 5;
  double cv_grid_min = 1e-3;
  double cv_grid_max = 1e3;
  std::size_t cv_grid_points = 13;
  double encode_tol = 1e-6;
  int encode_max_sweeps = 200;
  StdKind nmse_std = StdKind::Population;

  double split = 0.8;
  int repeats = 40;
  std::uint64_t seed = 0;
  std::string output = "mtdl_out";

  std::vector<double> lambda_grid() const;
  void validate() const;
};

/// Applies one "key = value" setting; throws DimensionError on an unknown key
/// or a bad value.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Parses flat "key = value" lines ('#' starts a comment) on top of `base`.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});

/// Every setting, in the same syntax parse_config reads.
std::string to_config_text(const ExperimentConfig& config);

}  // namespace mtdl
