#include "mtdl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "mtdl/metrics.hpp"
#include "mtdl/regression.hpp"

namespace mtdl {

namespace {

enum SeedStream : std::uint64_t { kSplit = 1, kTrain = 2, kFolds = 3 };

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::size_t> broadcast(const std::vector<std::size_t>& v, std::size_t tasks) {
  if (v.size() == tasks) return v;
  if (v.size() == 1) return std::vector<std::size_t>(tasks, v.front());
  throw DimensionError("individual_atoms needs 1 or " + std::to_string(tasks) + " entries");
}

MeanStd summarize(const std::vector<double>& values) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (values.empty()) return {nan, nan};
  if (values.size() == 1) return {values.front(), nan};
  return aggregate(values);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(master ^ splitmix64((stream << 32) ^ splitmix64(index)));
}

Dataset load_dataset(const ExperimentConfig& config) {
  Dataset data;
  if (config.task_files.empty()) {
    SyntheticSpec spec = config.synthetic;
    if (!config.synthetic_seed_set) spec.seed = config.seed;
    SyntheticData synth = generate_synthetic(spec);
    data.tasks = std::move(synth.tasks);
    data.groupings = std::move(synth.groupings);
    data.targets = std::move(synth.targets);
    return data;
  }
  for (std::size_t t = 0; t < config.task_files.size(); ++t) {
    data.tasks.push_back(load_matrix(config.task_files[t]));
    data.groupings.push_back(load_grouping(config.grouping_files[t]));
    if (data.groupings.back().patch_count() != data.tasks.back().cols()) {
      throw FormatError("grouping '" + config.grouping_files[t] + "' covers " +
                        std::to_string(data.groupings.back().patch_count()) + " patches, task has " +
                        std::to_string(data.tasks.back().cols()));
    }
  }
  data.targets = load_table(config.targets_file);
  return data;
}

RepeatOutcome run_repeat(const Dataset& data, const ExperimentConfig& config, int repeat) {
  RepeatOutcome out;
  out.repeat = repeat;
  out.seed = derive_seed(config.seed, kTrain, static_cast<std::uint64_t>(repeat));
  const std::size_t task_count = data.tasks.size();

  // Subjects with targets and patches in every task.
  std::vector<std::string> subjects;
  for (const auto& id : data.targets.row_names) {
    bool everywhere = true;
    for (const auto& g : data.groupings) {
      everywhere = everywhere && std::find(g.subjects().begin(), g.subjects().end(), id) != g.subjects().end();
    }
    if (everywhere) subjects.push_back(id);
  }
  if (subjects.size() < 2) throw DimensionError("fewer than 2 subjects have targets and patches in every task");

  std::vector<std::size_t> order(subjects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 split_rng(derive_seed(config.seed, kSplit, static_cast<std::uint64_t>(repeat)));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n = static_cast<double>(subjects.size());
  const std::size_t n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.split * n)), 1, subjects.size() - 1);
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::unordered_set<std::string> train_set;
  for (auto i : train_idx) {
    out.train_subjects.push_back(subjects[i]);
    train_set.insert(subjects[i]);
  }
  for (auto i : test_idx) out.test_subjects.push_back(subjects[i]);

  std::vector<FeatureMatrix> train_tasks;
  for (std::size_t t = 0; t < task_count; ++t) {
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < data.groupings[t].patch_count(); ++i) {
      if (train_set.count(data.groupings[t].subject_of(i))) cols.push_back(i);
    }
    train_tasks.push_back(data.tasks[t].select_cols(cols));
  }

  MsccConfig mc = config.mscc;
  mc.seed = out.seed;
  mc.individual_atoms = broadcast(mc.individual_atoms, task_count);
  std::vector<Dictionary> dicts;
  if (config.mode == DictionaryMode::Mscc) {
    TrainResult trained = train(train_tasks, mc);
    dicts = std::move(trained.dictionaries);
    out.objective_trace = std::move(trained.objective_trace);
  } else {
    std::size_t total = 0;
    for (const auto& m : train_tasks) total += m.cols();
    Matrix pooled(train_tasks.front().rows(), total);
    std::size_t at = 0;
    for (const auto& m : train_tasks) {
      std::copy(m.values().begin(), m.values().end(),
                pooled.values().begin() + static_cast<std::ptrdiff_t>(at * m.rows()));
      at += m.cols();
    }
    MsccConfig single = mc;
    single.shared_atoms =
        mc.shared_atoms + *std::max_element(mc.individual_atoms.begin(), mc.individual_atoms.end());
    single.individual_atoms = {0};
    TrainResult trained = train(std::span<const FeatureMatrix>(&pooled, 1), single);
    out.objective_trace = std::move(trained.objective_trace);
    dicts.assign(task_count, trained.dictionaries.front());
  }

  const EncodeOptions enc{.lambda = mc.lambda, .tol = config.encode_tol,
                          .max_sweeps = config.encode_max_sweeps};
  std::vector<SubjectFeatureTable> pooled;
  for (std::size_t t = 0; t < task_count; ++t) {
    EncodeResult codes = encode(dicts[t], data.tasks[t], enc);
    pooled.push_back(max_pool(codes.codes, data.groupings[t], config.pool));
  }

  std::vector<std::size_t> feature_tasks;
  if (config.features == FeatureMode::Concat) {
    feature_tasks.resize(task_count);
    std::iota(feature_tasks.begin(), feature_tasks.end(), std::size_t{0});
  } else {
    feature_tasks.push_back(task_count - 1);
  }
  std::size_t width = 0;
  for (auto t : feature_tasks) width += pooled[t].features.cols();
  auto design = [&](const std::vector<std::size_t>& rows) {
    Matrix x(rows.size(), width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::size_t col = 0;
      for (auto t : feature_tasks) {
        const std::size_t s = data.groupings[t].subject_index(subjects[rows[r]]);
        for (std::size_t j = 0; j < pooled[t].features.cols(); ++j) x(r, col++) = pooled[t].features(s, j);
      }
    }
    return x;
  };
  const Matrix x_train = design(train_idx);
  const Matrix x_test = design(test_idx);

  const std::vector<double> grid = config.lambda_grid();
  MultiTaskEval eval;
  for (std::size_t k = 0; k < data.targets.col_names.size(); ++k) {
    std::vector<double> y_train, y_test;
    for (auto i : train_idx) y_train.push_back(data.targets.values(data.targets.row_index(subjects[i]), k));
    for (auto i : test_idx) y_test.push_back(data.targets.values(data.targets.row_index(subjects[i]), k));
    const CvReport cv = cross_validate(
        x_train, y_train, config.regression, config.cv_folds, grid,
        derive_seed(config.seed, kFolds, static_cast<std::uint64_t>(repeat) * 4096 + k));
    const RegressionModel model = fit(x_train, y_train, config.regression, cv.chosen);
    std::vector<double> pred = predict(model, x_test);
    out.chosen_lambda.push_back(cv.chosen);
    out.rmse.push_back(rmse(y_test, pred));
    eval.add_task(std::move(y_test), std::move(pred));
  }
  out.nmse = nmse(eval, config.nmse_std);
  out.wr = weighted_corr(eval);
  out.ok = true;
  return out;
}

namespace {

void write_outputs(const ExperimentConfig& config, const Dataset& data, const PipelineResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(config.output);
  fs::create_directories(dir);
  write_text(dir / "config.txt", to_config_text(config));
  save_results(dir / "results.csv", result.rows);

  std::ostringstream rep;
  rep << "repeat,seed,status,nMSE,wR";
  for (const auto& name : result.target_names) rep << ",rMSE_" << name;
  for (const auto& name : result.target_names) rep << ",lambda_" << name;
  rep << ",error\n";
  std::ostringstream splits;
  splits << "repeat,subject,set\n";
  for (const auto& r : result.repeats) {
    rep << r.repeat << "," << r.seed << "," << (r.ok ? "ok" : "failed") << ",";
    if (r.ok) {
      rep << format_double(r.nmse) << "," << format_double(r.wr);
      for (double v : r.rmse) rep << "," << format_double(v);
      for (double v : r.chosen_lambda) rep << "," << format_double(v);
      rep << ",\n";
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      rep << ",";
      for (std::size_t k = 0; k < 2 * result.target_names.size(); ++k) rep << ",";
      rep << "," << msg << "\n";
    }
    for (const auto& s : r.train_subjects) splits << r.repeat << "," << s << ",train\n";
    for (const auto& s : r.test_subjects) splits << r.repeat << "," << s << ",test\n";
  }
  write_text(dir / "repeats.csv", rep.str());
  write_text(dir / "splits.csv", splits.str());

  nlohmann::json m;
  m["protocol"] = {
      {"lambda", config.mscc.lambda},
      {"epochs", config.mscc.epochs},
      {"batch_size", 1},
      {"ccd_full_passes", config.mscc.ccd_full_passes},
      {"ccd_support_passes", config.mscc.ccd_support_passes},
      {"shared_atoms", config.mscc.shared_atoms},
      {"individual_atoms", broadcast(config.mscc.individual_atoms, data.tasks.size())},
      {"shuffle_samples", config.mscc.shuffle_samples},
      {"mode", to_string(config.mode)},
      {"pool", to_string(config.pool)},
      {"features", to_string(config.features)},
      {"regression", to_string(config.regression)},
      {"cv_folds", config.cv_folds},
      {"cv_grid", config.lambda_grid()},
      {"cv_grid_min", config.cv_grid_min},
      {"cv_grid_max", config.cv_grid_max},
      {"encode_tol", config.encode_tol},
      {"encode_max_sweeps", config.encode_max_sweeps},
      {"nmse_std", to_string(config.nmse_std)},
      {"split", config.split},
      {"split_unit", "subject"},
      {"repeats", config.repeats},
      {"seed", config.seed},
  };
  nlohmann::json tasks = nlohmann::json::array();
  for (std::size_t t = 0; t < data.tasks.size(); ++t) {
    tasks.push_back({{"rows", data.tasks[t].rows()},
                     {"patches", data.tasks[t].cols()},
                     {"subjects", data.groupings[t].subject_count()}});
  }
  m["data"] = {{"source", config.task_files.empty() ? "synthetic" : "files"},
               {"tasks", tasks},
               {"targets", result.target_names}};
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& r : result.repeats) {
    if (!r.ok) failures.push_back({{"repeat", r.repeat}, {"error", r.error}});
  }
  m["repeats"] = {{"requested", config.repeats},
                  {"succeeded", result.repeats.size() - result.failed},
                  {"failed", result.failed},
                  {"failures", failures}};
  m["files"] = {"config.txt", "results.csv", "repeats.csv", "splits.csv"};
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& config, bool write_files) {
  config.validate();
  return run_pipeline(load_dataset(config), config, write_files);
}

PipelineResult run_pipeline(const Dataset& data, const ExperimentConfig& config, bool write_files) {
  config.validate();
  if (data.tasks.empty()) throw DimensionError("dataset has no tasks");
  if (data.targets.col_names.empty()) throw DimensionError("dataset has no targets");
  PipelineResult result;
  result.target_names = data.targets.col_names;
  for (int r = 0; r < config.repeats; ++r) {
    try {
      result.repeats.push_back(run_repeat(data, config, r));
    } catch (const std::exception& e) {
      RepeatOutcome failed;
      failed.repeat = r;
      failed.seed = derive_seed(config.seed, kTrain, static_cast<std::uint64_t>(r));
      failed.error = e.what();
      result.repeats.push_back(std::move(failed));
      ++result.failed;
    }
  }

  std::vector<double> nmse_values, wr_values;
  std::vector<std::vector<double>> rmse_values(result.target_names.size());
  for (const auto& r : result.repeats) {
    if (!r.ok) continue;
    nmse_values.push_back(r.nmse);
    wr_values.push_back(r.wr);
    for (std::size_t k = 0; k < r.rmse.size(); ++k) rmse_values[k].push_back(r.rmse[k]);
  }
  auto push = [&](const std::string& metric, const std::string& task, const std::vector<double>& v) {
    const MeanStd s = summarize(v);
    result.rows.push_back({metric, task, s.mean, s.std});
  };
  push("nMSE", "all", nmse_values);
  push("wR", "all", wr_values);
  for (std::size_t k = 0; k < result.target_names.size(); ++k) {
    push("rMSE", result.target_names[k], rmse_values[k]);
  }
  if (write_files) write_outputs(config, data, result);
  return result;
}

std::vector<SplitRow> sweep_dict_split(const ExperimentConfig& config,
                                       const std::vector<std::pair<std::size_t, std::size_t>>& splits,
                                       bool write_files) {
  config.validate();
  if (splits.empty()) throw DimensionError("no dictionary splits given");
  const Dataset data = load_dataset(config);
  std::vector<SplitRow> rows;
  std::vector<ResultRow> table;
  for (const auto& [shared, individual] : splits) {
    ExperimentConfig c = config;
    c.mode = DictionaryMode::Mscc;
    c.mscc.shared_atoms = shared;
    c.mscc.individual_atoms = {individual};
    c.output = (std::filesystem::path(config.output) /
                ("split_" + std::to_string(shared) + "_" + std::to_string(individual)))
                   .string();
    PipelineResult res = run_pipeline(data, c, write_files);
    SplitRow row;
    row.shared = shared;
    row.individual = individual;
    for (const auto& r : res.repeats) {
      if (r.ok) row.per_repeat.push_back(mean(r.rmse));
    }
    const MeanStd s = summarize(row.per_repeat);
    row.rmse_mean = s.mean;
    row.rmse_std = s.std;
    rows.push_back(std::move(row));
  }
  if (write_files) {
    std::string out = "shared,individual,metric,task,mean,std\n";
    for (const auto& r : rows) {
      out += std::to_string(r.shared) + "," + std::to_string(r.individual) + ",rMSE,mean," +
             format_double(r.rmse_mean) + "," + format_double(r.rmse_std) + "\n";
    }
    write_text(std::filesystem::path(config.output) / "sweep.csv", out);
  }
  return rows;
}

}  // namespace mtdl
