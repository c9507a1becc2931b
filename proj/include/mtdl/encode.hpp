#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mtdl/linalg.hpp"
#include "mtdl/mscc.hpp"

namespace mtdl {

struct EncodeOptions {
  double lambda = 0.1;
  double tol = 1e-6;
  int max_sweeps = 200;
};

struct EncodeResult {
  CodeMatrix codes;
  /// Sweeps used per column.
  std::vector<int> sweeps;
  /// Columns that hit max_sweeps before the change fell below tol.
  std::vector<std::size_t> unconverged;
};

/// Lasso codes for every column of `patches` against a fixed dictionary,
/// by full coordinate sweeps from zero until the largest change is < tol.
EncodeResult encode(const Matrix& atoms, const FeatureMatrix& patches, const EncodeOptions& opts);

inline EncodeResult encode(const Dictionary& dict, const FeatureMatrix& patches,
                           const EncodeOptions& opts) {
  return encode(dict.atoms(), patches, opts);
}

/// Which subject each patch belongs to.
class PatchGrouping {
 public:
  PatchGrouping() = default;
  /// Subject order is first appearance in `subject_of`.
  explicit PatchGrouping(std::vector<std::string> subject_of);
  /// Explicit subject order; every subject must own at least one patch and
  /// every patch must name a listed subject.
  PatchGrouping(std::vector<std::string> subject_of, std::vector<std::string> subjects);

  std::size_t patch_count() const { return subject_of_.size(); }
  std::size_t subject_count() const { return subjects_.size(); }
  const std::vector<std::string>& subjects() const { return subjects_; }
  const std::string& subject_of(std::size_t patch) const { return subject_of_[patch]; }
  /// Patch indices owned by subject `s` (position in subjects()), ascending.
  const std::vector<std::size_t>& patches_of(std::size_t s) const { return members_[s]; }
  /// Position of `id` in subjects(); throws DimensionError if unknown.
  std::size_t subject_index(const std::string& id) const;

 private:
  void build();

  std::vector<std::string> subject_of_;
  std::vector<std::string> subjects_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::vector<std::vector<std::size_t>> members_;
};

/// One pooled feature row per subject.
struct SubjectFeatureTable {
  std::vector<std::string> subjects;
  /// subjects x code length
  Matrix features;
};

enum class PoolMode { AbsMax, SignedMax };

PoolMode parse_pool_mode(const std::string& name);
std::string to_string(PoolMode mode);

/// Per subject and coordinate, keeps the entry of largest magnitude with its
/// sign (AbsMax; ties go to the earliest patch) or the largest signed value
/// (SignedMax).
SubjectFeatureTable max_pool(const CodeMatrix& codes, const PatchGrouping& grouping,
                             PoolMode mode = PoolMode::AbsMax);

}  // namespace mtdl
