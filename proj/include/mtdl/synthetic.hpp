#pragma once

#include <vector>

#include "mtdl/config.hpp"
#include "mtdl/encode.hpp"
#include "mtdl/io.hpp"
#include "mtdl/mscc.hpp"

namespace mtdl {

struct SyntheticData {
  std::vector<FeatureMatrix> tasks;
  std::vector<PatchGrouping> groupings;
  /// One target column per task, named "task1", "task2", ...
  LabeledTable targets;
  std::vector<Dictionary> dictionaries;
  std::vector<CodeMatrix> codes;
};

/// X_t = D_t Z_t + noise with a shared block common to every D_t, unit-norm
/// planted atoms and s-sparse standard-normal codes. Target t is a sparse
/// linear function of each subject's max-pooled planted task-t codes plus
/// noise. Deterministic in spec.seed.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace mtdl
