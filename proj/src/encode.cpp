#include "mtdl/encode.hpp"

#include <algorithm>
#include <cmath>

#include "mtdl/ccd.hpp"

namespace mtdl {

EncodeResult encode(const Matrix& atoms, const FeatureMatrix& patches, const EncodeOptions& opts) {
  if (patches.rows() != atoms.rows()) {
    throw DimensionError("encode: patches have " + std::to_string(patches.rows()) +
                         " rows, dictionary has " + std::to_string(atoms.rows()));
  }
  if (!(opts.lambda > 0.0) || !(opts.tol > 0.0) || opts.max_sweeps < 1) {
    throw DimensionError("encode: lambda and tol must be positive, max_sweeps at least 1");
  }
  EncodeResult out;
  out.codes.reserve(patches.cols());
  out.sweeps.reserve(patches.cols());
  const SparseCode zero(atoms.cols());
  for (std::size_t i = 0; i < patches.cols(); ++i) {
    CoordinateCoder coder(atoms, patches.col(i), zero, opts.lambda);
    int sweeps = 0;
    bool converged = false;
    while (sweeps < opts.max_sweeps) {
      ++sweeps;
      if (coder.full_pass() < opts.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) out.unconverged.push_back(i);
    out.sweeps.push_back(sweeps);
    out.codes.push_back(coder.code());
  }
  return out;
}

PatchGrouping::PatchGrouping(std::vector<std::string> subject_of)
    : subject_of_(std::move(subject_of)) {
  for (const auto& id : subject_of_) {
    if (lookup_.emplace(id, subjects_.size()).second) subjects_.push_back(id);
  }
  build();
}

PatchGrouping::PatchGrouping(std::vector<std::string> subject_of, std::vector<std::string> subjects)
    : subject_of_(std::move(subject_of)), subjects_(std::move(subjects)) {
  for (std::size_t s = 0; s < subjects_.size(); ++s) {
    if (!lookup_.emplace(subjects_[s], s).second) {
      throw DimensionError("duplicate subject identifier '" + subjects_[s] + "'");
    }
  }
  build();
}

void PatchGrouping::build() {
  if (subject_of_.empty()) throw DimensionError("grouping has no patches");
  members_.assign(subjects_.size(), {});
  for (std::size_t i = 0; i < subject_of_.size(); ++i) {
    members_[subject_index(subject_of_[i])].push_back(i);
  }
  for (std::size_t s = 0; s < subjects_.size(); ++s) {
    if (members_[s].empty()) throw DimensionError("subject '" + subjects_[s] + "' owns no patches");
  }
}

std::size_t PatchGrouping::subject_index(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) throw DimensionError("unknown subject identifier '" + id + "'");
  return it->second;
}

PoolMode parse_pool_mode(const std::string& name) {
  if (name == "absmax") return PoolMode::AbsMax;
  if (name == "signedmax") return PoolMode::SignedMax;
  throw DimensionError("unknown pool mode '" + name + "' (expected absmax or signedmax)");
}

std::string to_string(PoolMode mode) {
  return mode == PoolMode::AbsMax ? "absmax" : "signedmax";
}

SubjectFeatureTable max_pool(const CodeMatrix& codes, const PatchGrouping& grouping,
                             PoolMode mode) {
  if (grouping.patch_count() == 0) throw DimensionError("max_pool: empty grouping");
  if (codes.size() != grouping.patch_count()) {
    throw DimensionError("max_pool: " + std::to_string(codes.size()) + " codes for " +
                         std::to_string(grouping.patch_count()) + " grouped patches");
  }
  const std::size_t length = codes.front().length();
  SubjectFeatureTable table;
  table.subjects = grouping.subjects();
  table.features = Matrix(grouping.subject_count(), length);

  std::vector<double> best(length);
  for (std::size_t s = 0; s < grouping.subject_count(); ++s) {
    const auto& members = grouping.patches_of(s);
    bool first = true;
    for (std::size_t patch : members) {
      const SparseCode& z = codes[patch];
      if (z.length() != length) throw DimensionError("max_pool: codes differ in length");
      if (first) {
        best = z.to_dense();
        first = false;
        continue;
      }
      // Coordinates absent from z are zero: they never beat the running value
      // under AbsMax, and under SignedMax they only matter against negatives.
      if (mode == PoolMode::SignedMax) {
        std::vector<double> dense = z.to_dense();
        for (std::size_t j = 0; j < length; ++j) best[j] = std::max(best[j], dense[j]);
      } else {
        auto idx = z.indices();
        auto val = z.values();
        for (std::size_t k = 0; k < idx.size(); ++k) {
          if (std::abs(val[k]) > std::abs(best[idx[k]])) best[idx[k]] = val[k];
        }
      }
    }
    for (std::size_t j = 0; j < length; ++j) table.features(s, j) = best[j];
  }
  return table;
}

}  // namespace mtdl
