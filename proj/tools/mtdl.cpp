// mtdl: command-line driver for multi-task dictionary learning experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtdl/config.hpp"
#include "mtdl/encode.hpp"
#include "mtdl/io.hpp"
#include "mtdl/metrics.hpp"
#include "mtdl/mscc.hpp"
#include "mtdl/pipeline.hpp"
#include "mtdl/regression.hpp"
#include "mtdl/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mtdl;

namespace {

/// Flags that map one-to-one onto config keys; set flags override the file.
struct SettingFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option*, std::string>> bound;

  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    bound.emplace_back(app.add_option(flag, values[key], help), key);
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c;
    if (!config_file.empty()) c = parse_config(read_text(config_file));
    for (const auto& [opt, key] : bound) {
      if (opt->count() > 0) apply_setting(c, key, values.at(key));
    }
    return c;
  }
};

void add_training_flags(CLI::App& app, SettingFlags& s) {
  s.add(app, "--lambda", "lambda", "sparsity weight (default 0.1)");
  s.add(app, "--epochs", "epochs", "training epochs (default 10)");
  s.add(app, "--ccd-full-passes", "ccd_full_passes", "full coordinate passes per sample (default 1)");
  s.add(app, "--ccd-support-passes", "ccd_support_passes", "index-set passes per sample (default 3)");
  s.add(app, "--shared-atoms", "shared_atoms", "shared dictionary atoms");
  s.add(app, "--individual-atoms", "individual_atoms", "individual atoms, one value or one per task");
  s.add(app, "--shuffle", "shuffle_samples", "shuffle sample order each epoch (true/false)");
  s.add(app, "--seed", "seed", "master seed");
}

void add_experiment_flags(CLI::App& app, SettingFlags& s) {
  app.add_option("--config", s.config_file, "flat key = value config file")->check(CLI::ExistingFile);
  add_training_flags(app, s);
  s.add(app, "--tasks", "tasks", "comma-separated task matrix files (empty: synthetic data)");
  s.add(app, "--groupings", "groupings", "comma-separated grouping files, one per task");
  s.add(app, "--targets", "targets", "subject target table (CSV)");
  s.add(app, "--mode", "mode", "mscc | baseline");
  s.add(app, "--pool", "pool", "absmax | signedmax");
  s.add(app, "--features", "features", "concat | last");
  s.add(app, "--regression", "regression", "lasso | ridge");
  s.add(app, "--cv-folds", "cv_folds", "cross-validation folds (default 5)");
  s.add(app, "--cv-grid-min", "cv_grid_min", "smallest regularization value (default 1e-3)");
  s.add(app, "--cv-grid-max", "cv_grid_max", "largest regularization value (default 1e3)");
  s.add(app, "--cv-grid-points", "cv_grid_points", "log-spaced grid points (default 13)");
  s.add(app, "--encode-tol", "encode_tol", "encoding tolerance (default 1e-6)");
  s.add(app, "--encode-max-sweeps", "encode_max_sweeps", "encoding sweep cap (default 200)");
  s.add(app, "--nmse-std", "nmse_std", "population | sample");
  s.add(app, "--split", "split", "training fraction of subjects (default 0.8)");
  s.add(app, "--repeats", "repeats", "repeated random splits (default 40)");
  s.add(app, "--out", "output", "output directory");
  s.add(app, "--synth-tasks", "synth.tasks", "synthetic: task count");
  s.add(app, "--synth-dim", "synth.dim", "synthetic: feature dimension");
  s.add(app, "--synth-shared-atoms", "synth.shared_atoms", "synthetic: planted shared atoms");
  s.add(app, "--synth-individual-atoms", "synth.individual_atoms", "synthetic: planted individual atoms");
  s.add(app, "--synth-sparsity", "synth.sparsity", "synthetic: nonzeros per code");
  s.add(app, "--synth-samples", "synth.samples", "synthetic: patches per task");
  s.add(app, "--synth-subjects", "synth.subjects", "synthetic: subjects");
  s.add(app, "--synth-noise", "synth.noise", "synthetic: patch noise level");
  s.add(app, "--synth-target-noise", "synth.target_noise", "synthetic: target noise level");
  s.add(app, "--synth-target-sparsity", "synth.target_sparsity", "synthetic: nonzero target weights");
  s.add(app, "--synth-seed", "synth.seed", "synthetic: seed (default: master seed)");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : split_csv_line(text)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Matrix codes_to_matrix(const CodeMatrix& codes, std::size_t length) {
  Matrix m(length, codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    auto idx = codes[i].indices();
    auto val = codes[i].values();
    for (std::size_t k = 0; k < idx.size(); ++k) m(idx[k], i) = val[k];
  }
  return m;
}

CodeMatrix matrix_to_codes(const Matrix& m) {
  CodeMatrix codes;
  codes.reserve(m.cols());
  for (std::size_t i = 0; i < m.cols(); ++i) codes.push_back(SparseCode::from_dense(m.col(i)));
  return codes;
}

LabeledTable to_table(const SubjectFeatureTable& pooled) {
  LabeledTable t;
  t.row_names = pooled.subjects;
  for (std::size_t j = 0; j < pooled.features.cols(); ++j) t.col_names.push_back("f" + std::to_string(j));
  t.values = pooled.features;
  return t;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_splits(const std::string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw DimensionError("split '" + item + "' is not shared:individual");
    out.emplace_back(std::stoul(item.substr(0, colon)), std::stoul(item.substr(colon + 1)));
  }
  if (out.empty()) throw DimensionError("no splits given");
  return out;
}

/// The 250:1750 ... 1750:250 proportions scaled to a total atom count.
std::vector<std::pair<std::size_t, std::size_t>> default_splits(std::size_t total) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t eighths : {1, 2, 4, 6, 7}) {
    const std::size_t shared = total * eighths / 8;
    out.emplace_back(shared, total - shared);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task stochastic coordinate coding and regression pipeline"};
  app.require_subcommand(1);

  // synth
  SettingFlags synth_flags;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate planted multi-task data");
  synth->add_option("--config", synth_flags.config_file, "config file")->check(CLI::ExistingFile);
  synth_flags.add(*synth, "--seed", "seed", "seed (used when --synth-seed is absent)");
  synth_flags.add(*synth, "--synth-tasks", "synth.tasks", "task count");
  synth_flags.add(*synth, "--synth-dim", "synth.dim", "feature dimension");
  synth_flags.add(*synth, "--synth-shared-atoms", "synth.shared_atoms", "planted shared atoms");
  synth_flags.add(*synth, "--synth-individual-atoms", "synth.individual_atoms", "planted individual atoms");
  synth_flags.add(*synth, "--synth-sparsity", "synth.sparsity", "nonzeros per code");
  synth_flags.add(*synth, "--synth-samples", "synth.samples", "patches per task");
  synth_flags.add(*synth, "--synth-subjects", "synth.subjects", "subjects");
  synth_flags.add(*synth, "--synth-noise", "synth.noise", "patch noise level");
  synth_flags.add(*synth, "--synth-target-noise", "synth.target_noise", "target noise level");
  synth_flags.add(*synth, "--synth-target-sparsity", "synth.target_sparsity", "nonzero target weights");
  synth_flags.add(*synth, "--synth-seed", "synth.seed", "seed");
  synth->add_option("--out", synth_out, "output directory")->required();

  // train
  SettingFlags train_flags;
  std::string train_tasks, train_out;
  auto* train_cmd = app.add_subcommand("train", "learn shared and individual dictionaries");
  train_cmd->add_option("--config", train_flags.config_file, "config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--tasks", train_tasks, "comma-separated task matrix files")->required();
  add_training_flags(*train_cmd, train_flags);
  train_cmd->add_option("--out", train_out, "output directory")->required();

  // encode
  std::string enc_dict, enc_patches, enc_out;
  double enc_lambda = 0.1, enc_tol = 1e-6;
  int enc_sweeps = 200;
  auto* encode_cmd = app.add_subcommand("encode", "sparse-code patches against a fixed dictionary");
  encode_cmd->add_option("--dict", enc_dict, "dictionary matrix file")->required();
  encode_cmd->add_option("--patches", enc_patches, "patch matrix file")->required();
  encode_cmd->add_option("--lambda", enc_lambda, "sparsity weight");
  encode_cmd->add_option("--tol", enc_tol, "stop when the largest coordinate change is below this");
  encode_cmd->add_option("--max-sweeps", enc_sweeps, "sweep cap per patch");
  encode_cmd->add_option("--out", enc_out, "code matrix file")->required();

  // pool
  std::string pool_codes, pool_grouping, pool_mode = "absmax", pool_out;
  auto* pool_cmd = app.add_subcommand("pool", "max-pool patch codes into subject features");
  pool_cmd->add_option("--codes", pool_codes, "code matrix file")->required();
  pool_cmd->add_option("--grouping", pool_grouping, "patch,subject grouping file")->required();
  pool_cmd->add_option("--pool", pool_mode, "absmax | signedmax");
  pool_cmd->add_option("--out", pool_out, "feature table (CSV)")->required();

  // regress
  std::string reg_features, reg_targets, reg_target, reg_method = "lasso", reg_test, reg_out;
  std::size_t reg_folds = 5, reg_points = 13;
  double reg_min = 1e-3, reg_max = 1e3;
  std::uint64_t reg_seed = 0;
  auto* regress_cmd = app.add_subcommand("regress", "cross-validated Lasso/Ridge on subject features");
  regress_cmd->add_option("--features", reg_features, "training feature table")->required();
  regress_cmd->add_option("--targets", reg_targets, "target table")->required();
  regress_cmd->add_option("--target", reg_target, "target column (default: every column)");
  regress_cmd->add_option("--method", reg_method, "lasso | ridge");
  regress_cmd->add_option("--cv-folds", reg_folds, "folds");
  regress_cmd->add_option("--cv-grid-min", reg_min, "smallest regularization value");
  regress_cmd->add_option("--cv-grid-max", reg_max, "largest regularization value");
  regress_cmd->add_option("--cv-grid-points", reg_points, "grid points");
  regress_cmd->add_option("--seed", reg_seed, "fold assignment seed");
  regress_cmd->add_option("--predict", reg_test, "feature table to predict (default: training table)");
  regress_cmd->add_option("--out", reg_out, "prediction table (CSV)")->required();

  // evaluate
  std::string eval_truth, eval_pred, eval_std = "population", eval_out;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "nMSE, wR and rMSE of predictions");
  evaluate_cmd->add_option("--truth", eval_truth, "target table")->required();
  evaluate_cmd->add_option("--pred", eval_pred, "prediction table")->required();
  evaluate_cmd->add_option("--nmse-std", eval_std, "population | sample");
  evaluate_cmd->add_option("--out", eval_out, "metric table (CSV); stdout when absent");

  // pipeline
  SettingFlags pipe_flags;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "repeated split / train / encode / regress / evaluate");
  add_experiment_flags(*pipeline_cmd, pipe_flags);

  // sweep-dict-split
  SettingFlags sweep_flags;
  std::string sweep_splits;
  auto* sweep_cmd = app.add_subcommand("sweep-dict-split", "pipeline over shared:individual atom splits");
  add_experiment_flags(*sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--splits", sweep_splits,
                        "comma-separated shared:individual pairs (default: 1/8..7/8 of the total)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      ExperimentConfig c = synth_flags.resolve();
      SyntheticSpec spec = c.synthetic;
      if (!c.synthetic_seed_set) spec.seed = c.seed;
      SyntheticData data = generate_synthetic(spec);
      const fs::path dir(synth_out);
      for (std::size_t t = 0; t < data.tasks.size(); ++t) {
        const std::string n = std::to_string(t + 1);
        save_matrix(dir / ("task" + n + ".bin"), data.tasks[t]);
        save_grouping(dir / ("grouping" + n + ".csv"), data.groupings[t]);
        save_matrix(dir / ("planted_dict" + n + ".bin"), data.dictionaries[t].atoms());
        save_matrix(dir / ("planted_codes" + n + ".bin"),
                    codes_to_matrix(data.codes[t], data.dictionaries[t].total_cols()));
      }
      save_table(dir / "targets.csv", data.targets);
      std::cout << "wrote " << data.tasks.size() << " tasks to " << dir.string() << "\n";
    } else if (*train_cmd) {
      ExperimentConfig c = train_flags.resolve();
      std::vector<FeatureMatrix> tasks;
      for (const auto& f : split_list(train_tasks)) tasks.push_back(load_matrix(f));
      MsccConfig mc = c.mscc;
      mc.seed = c.seed;
      if (mc.individual_atoms.size() == 1) mc.individual_atoms.assign(tasks.size(), mc.individual_atoms.front());
      TrainResult res = train(tasks, mc, [](int epoch, double value) {
        std::cerr << "epoch " << epoch << " objective " << format_double(value) << "\n";
      });
      const fs::path dir(train_out);
      std::string trace = "epoch,objective\n";
      for (std::size_t k = 0; k < res.objective_trace.size(); ++k) {
        trace += std::to_string(k + 1) + "," + format_double(res.objective_trace[k]) + "\n";
      }
      write_text(dir / "objective.csv", trace);
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        const std::string n = std::to_string(t + 1);
        save_matrix(dir / ("dict" + n + ".bin"), res.dictionaries[t].atoms());
        save_matrix(dir / ("codes" + n + ".bin"),
                    codes_to_matrix(res.codes[t], res.dictionaries[t].total_cols()));
      }
      nlohmann::json info = {{"lambda", mc.lambda},
                             {"epochs", mc.epochs},
                             {"ccd_full_passes", mc.ccd_full_passes},
                             {"ccd_support_passes", mc.ccd_support_passes},
                             {"shared_atoms", mc.shared_atoms},
                             {"individual_atoms", mc.individual_atoms},
                             {"seed", mc.seed}};
      write_text(dir / "train.json", info.dump(2) + "\n");
    } else if (*encode_cmd) {
      const Matrix dict = load_matrix(enc_dict);
      const Matrix patches = load_matrix(enc_patches);
      EncodeResult res = encode(dict, patches, {.lambda = enc_lambda, .tol = enc_tol, .max_sweeps = enc_sweeps});
      save_matrix(enc_out, codes_to_matrix(res.codes, dict.cols()));
      if (!res.unconverged.empty()) {
        std::cerr << res.unconverged.size() << " of " << patches.cols()
                  << " patches did not converge within " << enc_sweeps << " sweeps\n";
      }
    } else if (*pool_cmd) {
      const Matrix codes = load_matrix(pool_codes);
      const PatchGrouping grouping = load_grouping(pool_grouping);
      save_table(pool_out, to_table(max_pool(matrix_to_codes(codes), grouping, parse_pool_mode(pool_mode))));
    } else if (*regress_cmd) {
      const LabeledTable features = load_table(reg_features);
      const LabeledTable targets = load_table(reg_targets);
      const LabeledTable apply_to = reg_test.empty() ? features : load_table(reg_test);
      const RegressionMethod method = parse_regression_method(reg_method);
      std::vector<std::size_t> columns;
      if (reg_target.empty()) {
        for (std::size_t k = 0; k < targets.col_names.size(); ++k) columns.push_back(k);
      } else {
        columns.push_back(targets.col_index(reg_target));
      }
      ExperimentConfig grid_cfg;
      grid_cfg.cv_grid_min = reg_min;
      grid_cfg.cv_grid_max = reg_max;
      grid_cfg.cv_grid_points = reg_points;
      const auto grid = grid_cfg.lambda_grid();
      LabeledTable out;
      out.row_names = apply_to.row_names;
      out.values = Matrix(apply_to.row_names.size(), columns.size());
      for (std::size_t c = 0; c < columns.size(); ++c) {
        std::vector<double> y;
        for (const auto& s : features.row_names) y.push_back(targets.values(targets.row_index(s), columns[c]));
        const CvReport cv = cross_validate(features.values, y, method, reg_folds, grid, reg_seed);
        const RegressionModel model = fit(features.values, y, method, cv.chosen);
        const auto pred = predict(model, apply_to.values);
        for (std::size_t i = 0; i < pred.size(); ++i) out.values(i, c) = pred[i];
        out.col_names.push_back(targets.col_names[columns[c]]);
        std::cout << targets.col_names[columns[c]] << ": chosen " << reg_method << " lambda "
                  << format_double(cv.chosen) << " (cv rMSE " << format_double(cv.mean_rmse[cv.chosen_index])
                  << ")\n";
      }
      save_table(reg_out, out);
    } else if (*evaluate_cmd) {
      const LabeledTable truth = load_table(eval_truth);
      const LabeledTable pred = load_table(eval_pred);
      MultiTaskEval eval;
      std::string text = "metric,task,value\n";
      for (std::size_t k = 0; k < pred.col_names.size(); ++k) {
        const std::size_t tk = truth.col_index(pred.col_names[k]);
        std::vector<double> y, yhat;
        for (std::size_t i = 0; i < pred.row_names.size(); ++i) {
          y.push_back(truth.values(truth.row_index(pred.row_names[i]), tk));
          yhat.push_back(pred.values(i, k));
        }
        text += "rMSE," + pred.col_names[k] + "," + format_double(rmse(y, yhat)) + "\n";
        eval.add_task(std::move(y), std::move(yhat));
      }
      text = "metric,task,value\nnMSE,all," + format_double(nmse(eval, parse_std_kind(eval_std))) +
             "\nwR,all," + format_double(weighted_corr(eval)) + "\n" + text.substr(text.find('\n') + 1);
      if (eval_out.empty()) std::cout << text;
      else write_text(eval_out, text);
    } else if (*pipeline_cmd) {
      const ExperimentConfig c = pipe_flags.resolve();
      PipelineResult res = run_pipeline(c);
      for (const auto& r : res.rows) {
        std::cout << r.metric << "," << r.task << "," << format_double(r.mean) << "," << format_double(r.std) << "\n";
      }
      if (res.failed > 0) {
        std::cerr << res.failed << " of " << c.repeats << " repeats failed; see " << c.output << "/repeats.csv\n";
        if (res.failed == res.repeats.size()) return 1;
      }
    } else if (*sweep_cmd) {
      const ExperimentConfig c = sweep_flags.resolve();
      std::size_t total = c.mscc.shared_atoms + c.mscc.individual_atoms.front();
      const auto splits = sweep_splits.empty() ? default_splits(total) : parse_splits(sweep_splits);
      for (const auto& row : sweep_dict_split(c, splits)) {
        std::cout << row.shared << ":" << row.individual << " rMSE " << format_double(row.rmse_mean)
                  << " +- " << format_double(row.rmse_std) << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "mtdl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
