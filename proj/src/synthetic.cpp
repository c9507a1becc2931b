#include "mtdl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace mtdl {

namespace {

Matrix random_unit_columns(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    auto column = m.col(c);
    double norm = 0.0;
    while (norm == 0.0) {
      for (double& v : column) v = normal(rng);
      norm = std::sqrt(squared_norm(column));
    }
    for (double& v : column) v /= norm;
  }
  return m;
}

std::string subject_name(std::size_t s, std::size_t total) {
  const int width = static_cast<int>(std::to_string(total - 1).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%0*zu", width, s);
  return buf;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  const std::size_t p = spec.dim;

  SyntheticData data;
  Matrix shared = random_unit_columns(p, spec.shared_atoms, rng);
  for (std::size_t t = 0; t < spec.tasks; ++t) {
    Matrix own = random_unit_columns(p, spec.individual_for(t), rng);
    Matrix atoms(p, spec.shared_atoms + own.cols());
    std::copy(shared.values().begin(), shared.values().end(), atoms.values().begin());
    std::copy(own.values().begin(), own.values().end(),
              atoms.values().begin() + static_cast<std::ptrdiff_t>(shared.size()));
    data.dictionaries.emplace_back(std::move(atoms), spec.shared_atoms);
  }

  std::vector<std::string> subjects;
  for (std::size_t s = 0; s < spec.subjects; ++s) subjects.push_back(subject_name(s, spec.subjects));

  std::vector<std::size_t> slots;
  for (std::size_t t = 0; t < spec.tasks; ++t) {
    const Dictionary& dict = data.dictionaries[t];
    const std::size_t l = dict.total_cols();
    slots.resize(l);
    CodeMatrix codes;
    codes.reserve(spec.samples);
    Matrix x(p, spec.samples);
    for (std::size_t i = 0; i < spec.samples; ++i) {
      std::iota(slots.begin(), slots.end(), std::size_t{0});
      for (std::size_t k = 0; k < spec.sparsity; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, l - 1);
        std::swap(slots[k], slots[pick(rng)]);
      }
      std::vector<std::size_t> support(slots.begin(),
                                       slots.begin() + static_cast<std::ptrdiff_t>(spec.sparsity));
      std::sort(support.begin(), support.end());
      std::vector<double> values;
      for (std::size_t k = 0; k < support.size(); ++k) values.push_back(normal(rng));
      codes.emplace_back(l, std::move(support), std::move(values));

      std::vector<double> clean = sparse_mul(dict.atoms(), codes.back());
      auto column = x.col(i);
      for (std::size_t r = 0; r < p; ++r) column[r] = clean[r] + spec.noise * normal(rng);
    }
    std::vector<std::string> owner(spec.samples);
    for (std::size_t i = 0; i < spec.samples; ++i) owner[i] = subjects[i * spec.subjects / spec.samples];
    data.groupings.emplace_back(std::move(owner), subjects);
    data.tasks.push_back(std::move(x));
    data.codes.push_back(std::move(codes));
  }

  data.targets.row_names = subjects;
  data.targets.values = Matrix(spec.subjects, spec.tasks);
  for (std::size_t t = 0; t < spec.tasks; ++t) {
    data.targets.col_names.push_back("task" + std::to_string(t + 1));
    SubjectFeatureTable pooled = max_pool(data.codes[t], data.groupings[t], PoolMode::AbsMax);
    const std::size_t l = pooled.features.cols();
    slots.resize(l);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    std::vector<double> weights(l, 0.0);
    for (std::size_t k = 0; k < spec.target_sparsity; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, l - 1);
      std::swap(slots[k], slots[pick(rng)]);
      weights[slots[k]] = normal(rng);
    }
    for (std::size_t s = 0; s < spec.subjects; ++s) {
      double y = 0.0;
      for (std::size_t j = 0; j < l; ++j) y += weights[j] * pooled.features(s, j);
      data.targets.values(s, t) = y + spec.target_noise * normal(rng);
    }
  }
  return data;
}

}  // namespace mtdl
