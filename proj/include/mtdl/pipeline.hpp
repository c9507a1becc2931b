#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mtdl/config.hpp"
#include "mtdl/io.hpp"
#include "mtdl/synthetic.hpp"

namespace mtdl {

/// Tasks, groupings and targets as the pipeline consumes them.
struct Dataset {
  std::vector<FeatureMatrix> tasks;
  std::vector<PatchGrouping> groupings;
  LabeledTable targets;
};

/// Reads the configured files, or generates synthetic data when no task
/// files are configured.
Dataset load_dataset(const ExperimentConfig& config);

/// Stateless 64-bit mix used to derive independent seeds from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

struct RepeatOutcome {
  int repeat = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double nmse = 0.0;
  double wr = 0.0;
  /// Per target, in target-column order.
  std::vector<double> rmse;
  std::vector<double> chosen_lambda;
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  std::vector<double> objective_trace;
};

struct PipelineResult {
  std::vector<RepeatOutcome> repeats;
  std::vector<std::string> target_names;
  /// metric,task,mean,std rows: nMSE/all, wR/all, then rMSE per target.
  std::vector<ResultRow> rows;
  std::size_t failed = 0;
};

/// One repeat: subject-level split, dictionary learning on training subjects'
/// patches, encoding and pooling, cross-validated regression per target, and
/// test metrics.
RepeatOutcome run_repeat(const Dataset& data, const ExperimentConfig& config, int repeat);

/// All repeats plus aggregation. Writes config.txt, manifest.json,
/// results.csv and repeats.csv into config.output when `write_files` is set.
PipelineResult run_pipeline(const ExperimentConfig& config, bool write_files = true);
PipelineResult run_pipeline(const Dataset& data, const ExperimentConfig& config,
                            bool write_files = true);

struct SplitRow {
  std::size_t shared = 0;
  std::size_t individual = 0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  /// Mean test rMSE (averaged over targets) of each successful repeat.
  std::vector<double> per_repeat;
};

/// Runs the pipeline once per (shared, individual) atom split and writes
/// sweep.csv ("shared,individual,metric,task,mean,std", one rMSE row per
/// split) to config.output.
std::vector<SplitRow> sweep_dict_split(const ExperimentConfig& config,
                                       const std::vector<std::pair<std::size_t, std::size_t>>& splits,
                                       bool write_files = true);

}  // namespace mtdl
