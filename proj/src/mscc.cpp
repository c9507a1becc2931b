#include "mtdl/mscc.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <random>

#include "mtdl/ccd.hpp"

namespace mtdl {

void MsccConfig::validate(std::size_t tasks) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DimensionError("lambda must be positive");
  if (epochs < 0) throw DimensionError("epochs must be nonnegative");
  if (ccd_full_passes < 1) throw DimensionError("ccd_full_passes must be at least 1");
  if (ccd_support_passes < 0) throw DimensionError("ccd_support_passes must be nonnegative");
  if (tasks == 0) throw DimensionError("at least one task is required");
  if (individual_atoms.size() != tasks) {
    throw DimensionError("individual_atoms has " + std::to_string(individual_atoms.size()) +
                         " entries for " + std::to_string(tasks) + " tasks");
  }
  for (std::size_t t = 0; t < tasks; ++t) {
    if (shared_atoms + individual_atoms[t] == 0) {
      throw DimensionError("task " + std::to_string(t) + " has an empty dictionary");
    }
  }
}

Dictionary::Dictionary(Matrix atoms, std::size_t shared_cols)
    : atoms_(std::move(atoms)), shared_cols_(shared_cols) {
  if (shared_cols_ > atoms_.cols()) throw DimensionError("shared block wider than dictionary");
}

void Dictionary::set_shared_block(const Matrix& phi) {
  if (phi.rows() != atoms_.rows() || phi.cols() != shared_cols_) {
    throw DimensionError("shared block shape mismatch");
  }
  std::copy(phi.values().begin(), phi.values().end(), atoms_.values().begin());
}

double max_column_norm(const Matrix& atoms) {
  double largest = 0.0;
  for (std::size_t c = 0; c < atoms.cols(); ++c) {
    largest = std::max(largest, std::sqrt(squared_norm(atoms.col(c))));
  }
  return largest;
}

namespace {

struct ColumnRef {
  std::size_t task;
  std::size_t col;
};

// Draws `count` distinct nonzero columns from `pool` without replacement and
// writes them, unit-normalized, into dest columns [first, first + count).
void draw_columns(std::span<const FeatureMatrix> tasks, std::vector<ColumnRef> pool,
                  std::size_t count, Matrix& dest, std::size_t first, std::mt19937_64& rng,
                  const char* what) {
  std::size_t filled = 0;
  for (std::size_t k = 0; k < pool.size() && filled < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
    auto column = tasks[pool[k].task].col(pool[k].col);
    const double norm = std::sqrt(squared_norm(column));
    if (norm == 0.0) continue;
    auto out = dest.col(first + filled);
    for (std::size_t r = 0; r < column.size(); ++r) out[r] = column[r] / norm;
    ++filled;
  }
  if (filled < count) {
    throw DimensionError(std::string(what) + ": only " + std::to_string(filled) +
                         " nonzero candidate columns for " + std::to_string(count) + " atoms");
  }
}

void check_tasks(std::span<const FeatureMatrix> tasks) {
  if (tasks.empty()) throw DimensionError("at least one task is required");
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    check_feature_matrix(tasks[t], "task " + std::to_string(t));
    if (tasks[t].rows() != tasks.front().rows()) {
      throw DimensionError("task " + std::to_string(t) + " has feature dimension " +
                           std::to_string(tasks[t].rows()) + ", expected " +
                           std::to_string(tasks.front().rows()));
    }
  }
}

}  // namespace

std::vector<Dictionary> init_dictionaries(std::span<const FeatureMatrix> tasks,
                                          const MsccConfig& config) {
  check_tasks(tasks);
  config.validate(tasks.size());
  const std::size_t p = tasks.front().rows();
  std::mt19937_64 rng(config.seed);

  std::vector<ColumnRef> pooled;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (std::size_t c = 0; c < tasks[t].cols(); ++c) pooled.push_back({t, c});
  }
  if (config.shared_atoms > pooled.size()) {
    throw DimensionError("shared_atoms exceeds the pooled sample count");
  }
  Matrix shared(p, config.shared_atoms);
  draw_columns(tasks, pooled, config.shared_atoms, shared, 0, rng, "shared block");

  std::vector<Dictionary> out;
  out.reserve(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const std::size_t own = config.individual_atoms[t];
    if (own > tasks[t].cols()) {
      throw DimensionError("task " + std::to_string(t) + " has fewer samples than individual atoms");
    }
    Matrix atoms(p, config.shared_atoms + own);
    std::copy(shared.values().begin(), shared.values().end(), atoms.values().begin());
    std::vector<ColumnRef> candidates;
    candidates.reserve(tasks[t].cols());
    for (std::size_t c = 0; c < tasks[t].cols(); ++c) candidates.push_back({t, c});
    draw_columns(tasks, std::move(candidates), own, atoms, config.shared_atoms, rng,
                 "individual block");
    out.emplace_back(std::move(atoms), config.shared_atoms);
  }
  return out;
}

SparseCode update_sparse_code(const Dictionary& dict, std::span<const double> x,
                              const SparseCode& z, double lambda, int full_passes,
                              int support_passes) {
  CoordinateCoder coder(dict.atoms(), x, z, lambda);
  for (int pass = 0; pass < full_passes; ++pass) coder.full_pass();
  for (int pass = 0; pass < support_passes; ++pass) coder.support_pass();
  return coder.code();
}

void update_dictionary(Dictionary& dict, std::span<const double> x, const SparseCode& z,
                       std::span<double> hessian_diag) {
  Matrix& atoms = dict.atoms();
  if (x.size() != atoms.rows()) throw DimensionError("sample length does not match dictionary");
  if (z.length() != atoms.cols() || hessian_diag.size() != atoms.cols()) {
    throw DimensionError("code or Hessian length does not match dictionary");
  }
  if (z.empty()) return;

  auto active = z.indices();
  auto coef = z.values();
  for (std::size_t k = 0; k < active.size(); ++k) hessian_diag[active[k]] += coef[k] * coef[k];

  std::vector<double> residual = sparse_mul(atoms, z);
  for (std::size_t r = 0; r < residual.size(); ++r) residual[r] -= x[r];

  for (std::size_t k = 0; k < active.size(); ++k) {
    const double h = hessian_diag[active[k]];
    assert(h > 0.0);
    const double rate = coef[k] / h;
    auto atom = atoms.col(active[k]);
    for (std::size_t r = 0; r < atom.size(); ++r) atom[r] -= rate * residual[r];
    const double norm = std::sqrt(squared_norm(atom));
    if (norm > 1.0) {
      for (double& v : atom) v /= norm;
    }
  }
}

TrainResult train(std::span<const FeatureMatrix> tasks, const MsccConfig& config,
                  const EpochCallback& on_epoch) {
  TrainResult result;
  result.dictionaries = init_dictionaries(tasks, config);
  auto& dicts = result.dictionaries;
  TrainerState& state = result.state;
  state.phi = dicts.front().shared_block();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    state.hessian_diag.emplace_back(dicts[t].total_cols(), 0.0);
    result.codes.emplace_back(tasks[t].cols(), SparseCode(dicts[t].total_cols()));
  }

  const std::size_t shared = config.shared_atoms;
  std::mt19937_64 order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      Dictionary& dict = dicts[t];
      // Within one task's sample loop only this task writes to phi, so the
      // shared block stays equal to phi after this copy; only the atoms a
      // sample touched need writing back.
      dict.set_shared_block(state.phi);
      order.resize(tasks[t].cols());
      std::iota(order.begin(), order.end(), std::size_t{0});
      if (config.shuffle_samples) std::shuffle(order.begin(), order.end(), order_rng);

      for (std::size_t i : order) {
        auto x = tasks[t].col(i);
        SparseCode z = update_sparse_code(dict, x, result.codes[t][i], config);
        update_dictionary(dict, x, z, state.hessian_diag[t]);
        for (std::size_t mu : z.indices()) {
          if (mu >= shared) break;
          auto src = dict.atoms().col(mu);
          std::copy(src.begin(), src.end(), state.phi.col(mu).begin());
        }
        result.codes[t][i] = std::move(z);
      }
    }
    state.epoch = epoch;
    for (auto& d : dicts) d.set_shared_block(state.phi);
    const double value = objective(tasks, dicts, result.codes, config.lambda);
    result.objective_trace.push_back(value);
    if (on_epoch) on_epoch(epoch, value);
  }
  return result;
}

double objective(std::span<const FeatureMatrix> tasks, std::span<const Dictionary> dictionaries,
                 std::span<const CodeMatrix> codes, double lambda) {
  if (tasks.size() != dictionaries.size() || tasks.size() != codes.size()) {
    throw DimensionError("objective: task, dictionary and code counts differ");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Matrix& atoms = dictionaries[t].atoms();
    if (atoms.rows() != tasks[t].rows() || codes[t].size() != tasks[t].cols()) {
      throw DimensionError("objective: shape mismatch in task " + std::to_string(t));
    }
    for (std::size_t i = 0; i < tasks[t].cols(); ++i) {
      std::vector<double> r = sparse_mul(atoms, codes[t][i]);
      auto x = tasks[t].col(i);
      double sq = 0.0;
      for (std::size_t k = 0; k < r.size(); ++k) {
        const double d = x[k] - r[k];
        sq += d * d;
      }
      total += 0.5 * sq + lambda * codes[t][i].l1_norm();
    }
  }
  return total;
}

}  // namespace mtdl
