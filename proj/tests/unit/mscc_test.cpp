#include <doctest.h>

#include <cmath>
#include <random>

#include "mtdl/ccd.hpp"
#include "mtdl/config.hpp"
#include "mtdl/encode.hpp"
#include "mtdl/mscc.hpp"
#include "mtdl/synthetic.hpp"
#include "oracles.hpp"

using namespace mtdl;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

MsccConfig small_config(std::size_t shared, std::size_t individual, int epochs = 3) {
  MsccConfig c;
  c.shared_atoms = shared;
  c.individual_atoms = {individual, individual, individual};
  c.epochs = epochs;
  c.seed = 17;
  return c;
}

std::vector<FeatureMatrix> small_tasks(std::uint64_t seed, std::size_t n = 120) {
  SyntheticSpec spec;
  spec.dim = 12;
  spec.shared_atoms = 3;
  spec.individual_atoms = {3};
  spec.samples = n;
  spec.subjects = 10;
  spec.seed = seed;
  return generate_synthetic(spec).tasks;
}

double sample_objective(const Matrix& d, std::span<const double> x, const SparseCode& z, double lambda) {
  std::vector<double> r = sparse_mul(d, z);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= x[i];
  return 0.5 * squared_norm(r) + lambda * z.l1_norm();
}

}  // namespace

TEST_CASE("init with a single forced column") {
  const Matrix c = Matrix::from_rows({{3.0}, {4.0}});
  MsccConfig cfg;
  cfg.shared_atoms = 1;
  cfg.individual_atoms = {0};
  const std::vector<FeatureMatrix> tasks{c};
  const auto dicts = init_dictionaries(tasks, cfg);
  REQUIRE(dicts.size() == 1);
  CHECK(dicts[0].atoms() == Matrix::from_rows({{0.6}, {0.8}}));
}

TEST_CASE("init is deterministic in the seed") {
  std::mt19937_64 rng(1);
  const std::vector<FeatureMatrix> tasks{random_matrix(6, 20, rng), random_matrix(6, 15, rng)};
  MsccConfig cfg;
  cfg.shared_atoms = 4;
  cfg.individual_atoms = {3, 5};
  cfg.seed = 99;
  CHECK(init_dictionaries(tasks, cfg) == init_dictionaries(tasks, cfg));
  auto other = cfg;
  other.seed = 100;
  CHECK_FALSE(init_dictionaries(tasks, cfg) == init_dictionaries(tasks, other));
}

TEST_CASE("init at full feature width") {
  std::mt19937_64 rng(2);
  std::vector<FeatureMatrix> tasks;
  for (int t = 0; t < 3; ++t) tasks.push_back(random_matrix(4096, 1000, rng));
  MsccConfig cfg;
  cfg.shared_atoms = 1000;
  cfg.individual_atoms = {1000, 1000, 1000};
  const auto dicts = init_dictionaries(tasks, cfg);
  for (const auto& d : dicts) {
    CHECK(d.atoms().rows() == 4096);
    CHECK(d.atoms().cols() == 2000);
    CHECK(d.shared_block() == dicts[0].shared_block());
    CHECK(max_column_norm(d.atoms()) <= 1.0 + 1e-12);
  }
  CHECK_FALSE(dicts[0].individual_block() == dicts[1].individual_block());
}

TEST_CASE("init skips zero columns and fails when too few remain") {
  Matrix x(3, 4);
  x(0, 1) = 2.0;
  x(2, 3) = -1.0;
  MsccConfig cfg;
  cfg.shared_atoms = 2;
  cfg.individual_atoms = {0};
  const std::vector<FeatureMatrix> tasks{x};
  const auto dicts = init_dictionaries(tasks, cfg);
  for (std::size_t c = 0; c < 2; ++c) CHECK(squared_norm(dicts[0].atoms().col(c)) == 1.0);
  cfg.shared_atoms = 3;
  CHECK_THROWS_AS(init_dictionaries(tasks, cfg), DimensionError);
}

TEST_CASE("init rejects inconsistent tasks") {
  std::mt19937_64 rng(3);
  const std::vector<FeatureMatrix> tasks{random_matrix(5, 10, rng), random_matrix(6, 10, rng)};
  MsccConfig cfg;
  cfg.shared_atoms = 1;
  cfg.individual_atoms = {1, 1};
  CHECK_THROWS_AS(init_dictionaries(tasks, cfg), DimensionError);
  const std::vector<FeatureMatrix> one{random_matrix(5, 2, rng)};
  cfg.individual_atoms = {3};
  CHECK_THROWS_AS(init_dictionaries(one, cfg), DimensionError);
}

TEST_CASE("scalar code update reaches the fixed point") {
  const Dictionary d(Matrix::from_rows({{1.0}}), 0);
  const std::vector<double> x{2.0};
  const SparseCode z = update_sparse_code(d, x, SparseCode(1), 0.1, 1, 3);
  CHECK(z.at(0) == doctest::Approx(1.9).epsilon(1e-15));
  CHECK(z.nnz() == 1);
}

TEST_CASE("zero signal keeps a zero code") {
  std::mt19937_64 rng(4);
  const Dictionary d(oracle::from_eigen(oracle::random_unit_columns(5, 8, rng)), 2);
  const std::vector<double> x(5, 0.0);
  const SparseCode z = update_sparse_code(d, x, SparseCode(8), 0.1, 1, 3);
  CHECK(z.empty());
  CoordinateCoder coder(d.atoms(), x, SparseCode(8), 0.1);
  coder.full_pass();
  CHECK(coder.support().empty());
}

TEST_CASE("converged coordinate descent matches the reference lasso") {
  std::mt19937_64 rng(5);
  const double lambda = 0.1;
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = oracle::random_unit_columns(20, 50, rng);
    const auto x = oracle::random_vector(20, rng);
    const Matrix dm = oracle::from_eigen(d);
    const auto xs = oracle::to_std(x);

    CoordinateCoder coder(dm, xs, SparseCode(50), lambda);
    for (int outer = 0; outer < 100000; ++outer) {
      const double full = coder.full_pass();
      while (coder.support_pass() >= 1e-10) {}
      if (full < 1e-10) break;
    }
    const auto want = oracle::lasso_code(d, x, lambda);
    const auto got = coder.code().to_dense();
    for (int j = 0; j < 50; ++j) CHECK(std::abs(got[j] - want(j)) <= 1e-6);
    const double got_obj = oracle::code_objective(d, x, oracle::to_eigen(got), lambda);
    const double best = oracle::code_objective(d, x, want, lambda);
    CHECK(std::abs(got_obj - best) <= 1e-8);
  }
}

TEST_CASE("one coordinate pass never raises the sample objective") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution keep(0.2);
  for (int trial = 0; trial < 100; ++trial) {
    const Dictionary d(oracle::from_eigen(oracle::random_unit_columns(10, 25, rng)), 5);
    const auto x = oracle::to_std(oracle::random_vector(10, rng));
    std::vector<double> start(25, 0.0);
    for (double& v : start)
      if (keep(rng)) v = normal(rng);
    const SparseCode z0 = SparseCode::from_dense(start);
    const double before = sample_objective(d.atoms(), x, z0, 0.1);
    const SparseCode z1 = update_sparse_code(d, x, z0, 0.1, 1, 3);
    CHECK(sample_objective(d.atoms(), x, z1, 0.1) <= before + 1e-12);
  }
}

TEST_CASE("scalar dictionary step and projection") {
  Dictionary d(Matrix::from_rows({{1.0}}), 0);
  std::vector<double> h{0.0};
  const std::vector<double> x{2.0};
  update_dictionary(d, x, SparseCode(1, {0}, {1.9}), h);
  CHECK(h[0] == doctest::Approx(3.61).epsilon(1e-15));
  CHECK(d.atoms()(0, 0) == 1.0);

  // Before projection the atom would be 1 + 0.19 / 3.61.
  Dictionary small(Matrix::from_rows({{0.5}}), 0);
  std::vector<double> h2{0.0};
  const std::vector<double> x2{1.0};
  update_dictionary(small, x2, SparseCode(1, {0}, {1.0}), h2);
  CHECK(small.atoms()(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("empty code leaves dictionary and Hessian alone") {
  std::mt19937_64 rng(7);
  Dictionary d(oracle::from_eigen(oracle::random_unit_columns(5, 3, rng)), 1);
  const Dictionary before = d;
  std::vector<double> h{0.5, 0.0, 2.0};
  const auto x = oracle::to_std(oracle::random_vector(5, rng));
  update_dictionary(d, x, SparseCode(3), h);
  CHECK(d == before);
  CHECK(h == std::vector<double>{0.5, 0.0, 2.0});
}

TEST_CASE("dictionary step matches the dense reference") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution keep(0.6);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd d = oracle::random_unit_columns(5, 3, rng) * 0.9;
    const auto x = oracle::random_vector(5, rng);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
    for (int j = 0; j < 3; ++j)
      if (keep(rng)) z(j) = normal(rng);
    Eigen::VectorXd h(3);
    for (int j = 0; j < 3; ++j) h(j) = trial % 2 ? 0.0 : std::abs(normal(rng));

    Dictionary dict(oracle::from_eigen(d), 1);
    std::vector<double> hs = oracle::to_std(h);
    const std::vector<double> zd = oracle::to_std(z);
    update_dictionary(dict, oracle::to_std(x), SparseCode::from_dense(zd), hs);
    oracle::dictionary_step(d, x, z, h);

    for (int j = 0; j < 3; ++j) CHECK(hs[j] == doctest::Approx(h(j)).epsilon(1e-14));
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 5; ++r) CHECK(std::abs(dict.atoms()(r, c) - d(r, c)) <= 1e-12);
  }
}

TEST_CASE("objective values") {
  std::mt19937_64 rng(9);
  const Dictionary d(oracle::from_eigen(oracle::random_unit_columns(4, 6, rng)), 2);
  const std::vector<double> code{1.0, 0.0, -2.0, 0.0, 0.5, 0.0};
  const SparseCode z = SparseCode::from_dense(code);
  Matrix x(4, 1);
  const auto col = sparse_mul(d.atoms(), z);
  std::copy(col.begin(), col.end(), x.col(0).begin());
  const std::vector<FeatureMatrix> tasks{x};
  const std::vector<Dictionary> dicts{d};
  CHECK(objective(tasks, dicts, std::vector<CodeMatrix>{{z}}, 0.0) == 0.0);

  const std::vector<CodeMatrix> zero{{SparseCode(6)}};
  CHECK(objective(tasks, dicts, zero, 0.1) == doctest::Approx(0.5 * squared_norm(x.col(0))).epsilon(1e-15));
}

TEST_CASE("objective matches dense evaluation") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution keep(0.3);
  std::vector<FeatureMatrix> tasks;
  std::vector<Dictionary> dicts;
  std::vector<CodeMatrix> codes;
  std::vector<Eigen::MatrixXd> ex, ed, ez;
  for (int t = 0; t < 3; ++t) {
    const std::size_t l = 4 + t;
    const Eigen::MatrixXd d = oracle::random_unit_columns(6, l, rng);
    Eigen::MatrixXd x(6, 9), z = Eigen::MatrixXd::Zero(l, 9);
    for (int i = 0; i < 9; ++i) {
      x.col(i) = oracle::random_vector(6, rng);
      for (std::size_t j = 0; j < l; ++j)
        if (keep(rng)) z(j, i) = normal(rng);
    }
    tasks.push_back(oracle::from_eigen(x));
    dicts.emplace_back(oracle::from_eigen(d), 2);
    CodeMatrix zc;
    for (int i = 0; i < 9; ++i) zc.push_back(SparseCode::from_dense(oracle::to_std(z.col(i))));
    codes.push_back(zc);
    ex.push_back(x);
    ed.push_back(d);
    ez.push_back(z);
  }
  CHECK(objective(tasks, dicts, codes, 0.3) ==
        doctest::Approx(oracle::multitask_objective(ex, ed, ez, 0.3)).epsilon(1e-12));
  codes.pop_back();
  CHECK_THROWS_AS(objective(tasks, dicts, codes, 0.3), DimensionError);
}

TEST_CASE("zero epochs returns the initial dictionaries") {
  const auto tasks = small_tasks(1);
  const auto cfg = small_config(3, 3, 0);
  const TrainResult r = train(tasks, cfg);
  CHECK(r.dictionaries == init_dictionaries(tasks, cfg));
  CHECK(r.objective_trace.empty());
  for (const auto& task_codes : r.codes)
    for (const auto& z : task_codes) CHECK(z.empty());
}

TEST_CASE("training keeps shared blocks identical and columns in the unit ball") {
  const auto tasks = small_tasks(2);
  const auto cfg = small_config(3, 3, 4);
  const TrainResult r = train(tasks, cfg);
  REQUIRE(r.dictionaries.size() == 3);
  for (const auto& d : r.dictionaries) {
    CHECK(d.shared_block() == r.dictionaries[0].shared_block());
    CHECK(d.shared_block() == r.state.phi);
    CHECK(max_column_norm(d.atoms()) <= 1.0 + 1e-12);
  }
  CHECK(r.objective_trace.size() == 4);
  CHECK(r.state.epoch == 4);
}

TEST_CASE("Hessian diagonal never decreases during a run") {
  const auto tasks = small_tasks(3, 60);
  const auto cfg = small_config(3, 3);
  auto dicts = init_dictionaries(tasks, cfg);
  Matrix phi = dicts[0].shared_block();
  std::vector<std::vector<double>> h(3, std::vector<double>(6, 0.0));
  std::vector<CodeMatrix> codes(3, CodeMatrix(60, SparseCode(6)));
  for (int epoch = 0; epoch < 2; ++epoch) {
    for (std::size_t t = 0; t < 3; ++t) {
      dicts[t].set_shared_block(phi);
      for (std::size_t i = 0; i < 60; ++i) {
        const auto before = h[t];
        codes[t][i] = update_sparse_code(dicts[t], tasks[t].col(i), codes[t][i], cfg);
        update_dictionary(dicts[t], tasks[t].col(i), codes[t][i], h[t]);
        for (std::size_t j = 0; j < 6; ++j) CHECK(h[t][j] >= before[j]);
        CHECK(max_column_norm(dicts[t].atoms()) <= 1.0 + 1e-12);
      }
      phi = dicts[t].shared_block();
    }
  }

  auto one = cfg;
  one.epochs = 1;
  auto two = cfg;
  two.epochs = 2;
  const auto r1 = train(tasks, one), r2 = train(tasks, two);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t j = 0; j < 6; ++j) CHECK(r2.state.hessian_diag[t][j] >= r1.state.hessian_diag[t][j]);
}

TEST_CASE("training is deterministic, shuffled or not") {
  const auto tasks = small_tasks(4);
  auto cfg = small_config(3, 3, 2);
  const auto a = train(tasks, cfg), b = train(tasks, cfg);
  CHECK(a.dictionaries == b.dictionaries);
  CHECK(a.objective_trace == b.objective_trace);
  cfg.shuffle_samples = true;
  const auto c = train(tasks, cfg), e = train(tasks, cfg);
  CHECK(c.dictionaries == e.dictionaries);
  CHECK(c.codes == e.codes);
}

TEST_CASE("a single task with only shared atoms is plain single-task coding") {
  const auto all = small_tasks(5);
  const std::vector<FeatureMatrix> tasks{all[0]};
  MsccConfig shared_only;
  shared_only.shared_atoms = 6;
  shared_only.individual_atoms = {0};
  shared_only.epochs = 3;
  MsccConfig own_only = shared_only;
  own_only.shared_atoms = 0;
  own_only.individual_atoms = {6};
  const auto a = train(tasks, shared_only), b = train(tasks, own_only);
  CHECK(a.dictionaries[0].atoms() == b.dictionaries[0].atoms());
  CHECK(a.codes == b.codes);
  CHECK(a.objective_trace == b.objective_trace);
}

TEST_CASE("epoch callback sees the objective trace") {
  const auto tasks = small_tasks(6);
  const auto cfg = small_config(3, 3, 3);
  std::vector<std::pair<int, double>> seen;
  const auto r = train(tasks, cfg, [&](int epoch, double value) { seen.emplace_back(epoch, value); });
  REQUIRE(seen.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(seen[k].first == k + 1);
    CHECK(seen[k].second == r.objective_trace[k]);
  }
  // trace agrees with a fresh evaluation of the returned state
  CHECK(objective(tasks, r.dictionaries, r.codes, cfg.lambda) == r.objective_trace.back());
}

TEST_CASE("config validation") {
  MsccConfig c;
  c.individual_atoms = {2};
  c.lambda = 0.0;
  CHECK_THROWS_AS(c.validate(1), DimensionError);
  c.lambda = 0.1;
  CHECK_NOTHROW(c.validate(1));
  CHECK_THROWS_AS(c.validate(2), DimensionError);
  c.epochs = -1;
  CHECK_THROWS_AS(c.validate(1), DimensionError);
}
