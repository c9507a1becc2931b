#include "mtdl/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "mtdl/io.hpp"

namespace mtdl {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <class Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out{};
  const std::string t = trim(value);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw DimensionError("setting '" + key + "': '" + value + "' is not a valid integer");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const FormatError&) {
    throw DimensionError("setting '" + key + "': '" + value + "' is not a number");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw DimensionError("setting '" + key + "': '" + value + "' is not a boolean");
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  for (auto& item : split_csv_line(value)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : parse_list(value)) out.push_back(parse_int<std::size_t>(key, item));
  if (out.empty()) throw DimensionError("setting '" + key + "' is empty");
  return out;
}

template <class T>
std::string join(const std::vector<T>& items) {
  std::ostringstream out;
  for (std::size_t k = 0; k < items.size(); ++k) out << (k ? "," : "") << items[k];
  return out.str();
}

}  // namespace

std::size_t SyntheticSpec::individual_for(std::size_t task) const {
  return individual_atoms.size() == 1 ? individual_atoms.front() : individual_atoms.at(task);
}

void SyntheticSpec::validate() const {
  if (tasks < 1 || dim < 1 || samples < 1 || subjects < 1 || sparsity < 1) {
    throw DimensionError("synthetic counts must all be at least 1");
  }
  if (individual_atoms.size() != 1 && individual_atoms.size() != tasks) {
    throw DimensionError("synthetic individual_atoms needs 1 or " + std::to_string(tasks) + " entries");
  }
  for (std::size_t t = 0; t < tasks; ++t) {
    const std::size_t atoms = shared_atoms + individual_for(t);
    if (sparsity > atoms) {
      throw DimensionError("synthetic sparsity " + std::to_string(sparsity) + " exceeds the " +
                           std::to_string(atoms) + " atoms of task " + std::to_string(t));
    }
    if (target_sparsity > atoms) throw DimensionError("target_sparsity exceeds the code length");
  }
  if (subjects > samples) throw DimensionError("every subject needs at least one patch");
  if (!(noise >= 0.0) || !(target_noise >= 0.0)) throw DimensionError("noise levels must be >= 0");
}

DictionaryMode parse_dictionary_mode(const std::string& name) {
  if (name == "mscc") return DictionaryMode::Mscc;
  if (name == "baseline") return DictionaryMode::Baseline;
  throw DimensionError("unknown mode '" + name + "' (expected mscc or baseline)");
}

std::string to_string(DictionaryMode mode) {
  return mode == DictionaryMode::Mscc ? "mscc" : "baseline";
}

FeatureMode parse_feature_mode(const std::string& name) {
  if (name == "concat") return FeatureMode::Concat;
  if (name == "last") return FeatureMode::Last;
  throw DimensionError("unknown feature mode '" + name + "' (expected concat or last)");
}

std::string to_string(FeatureMode mode) { return mode == FeatureMode::Concat ? "concat" : "last"; }

std::vector<double> ExperimentConfig::lambda_grid() const {
  if (cv_grid_points == 1) return {cv_grid_min};
  std::vector<double> grid;
  const double lo = std::log10(cv_grid_min);
  const double hi = std::log10(cv_grid_max);
  for (std::size_t k = 0; k < cv_grid_points; ++k) {
    grid.push_back(std::pow(10.0, lo + (hi - lo) * static_cast<double>(k) /
                                           static_cast<double>(cv_grid_points - 1)));
  }
  return grid;
}

void ExperimentConfig::validate() const {
  if (!(split > 0.0 && split < 1.0)) throw DimensionError("split must lie strictly between 0 and 1");
  if (repeats < 1) throw DimensionError("repeats must be at least 1");
  if (cv_folds < 2) throw DimensionError("cv_folds must be at least 2");
  if (cv_grid_points < 1 || !(cv_grid_min > 0.0) || !(cv_grid_max >= cv_grid_min)) {
    throw DimensionError("cv grid needs 0 < min <= max and at least one point");
  }
  if (!(encode_tol > 0.0) || encode_max_sweeps < 1) throw DimensionError("bad encode settings");
  if (task_files.empty()) {
    synthetic.validate();
  } else {
    if (grouping_files.size() != task_files.size()) {
      throw DimensionError("need one grouping file per task file");
    }
    if (targets_file.empty()) throw DimensionError("a targets file is required with task files");
  }
}

void apply_setting(ExperimentConfig& c, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(value);
  if (key == "tasks") c.task_files = parse_list(v);
  else if (key == "groupings") c.grouping_files = parse_list(v);
  else if (key == "targets") c.targets_file = v;
  else if (key == "lambda") c.mscc.lambda = parse_real(key, v);
  else if (key == "epochs") c.mscc.epochs = parse_int<int>(key, v);
  else if (key == "ccd_full_passes") c.mscc.ccd_full_passes = parse_int<int>(key, v);
  else if (key == "ccd_support_passes") c.mscc.ccd_support_passes = parse_int<int>(key, v);
  else if (key == "shared_atoms") c.mscc.shared_atoms = parse_int<std::size_t>(key, v);
  else if (key == "individual_atoms") c.mscc.individual_atoms = parse_size_list(key, v);
  else if (key == "shuffle_samples") c.mscc.shuffle_samples = parse_bool(key, v);
  else if (key == "mode") c.mode = parse_dictionary_mode(v);
  else if (key == "pool") c.pool = parse_pool_mode(v);
  else if (key == "features") c.features = parse_feature_mode(v);
  else if (key == "regression") c.regression = parse_regression_method(v);
  else if (key == "cv_folds") c.cv_folds = parse_int<std::size_t>(key, v);
  else if (key == "cv_grid_min") c.cv_grid_min = parse_real(key, v);
  else if (key == "cv_grid_max") c.cv_grid_max = parse_real(key, v);
  else if (key == "cv_grid_points") c.cv_grid_points = parse_int<std::size_t>(key, v);
  else if (key == "encode_tol") c.encode_tol = parse_real(key, v);
  else if (key == "encode_max_sweeps") c.encode_max_sweeps = parse_int<int>(key, v);
  else if (key == "nmse_std") c.nmse_std = parse_std_kind(v);
  else if (key == "split") c.split = parse_real(key, v);
  else if (key == "repeats") c.repeats = parse_int<int>(key, v);
  else if (key == "seed") c.seed = parse_int<std::uint64_t>(key, v);
  else if (key == "output") c.output = v;
  else if (key == "synth.tasks") c.synthetic.tasks = parse_int<std::size_t>(key, v);
  else if (key == "synth.dim") c.synthetic.dim = parse_int<std::size_t>(key, v);
  else if (key == "synth.shared_atoms") c.synthetic.shared_atoms = parse_int<std::size_t>(key, v);
  else if (key == "synth.individual_atoms") c.synthetic.individual_atoms = parse_size_list(key, v);
  else if (key == "synth.sparsity") c.synthetic.sparsity = parse_int<std::size_t>(key, v);
  else if (key == "synth.samples") c.synthetic.samples = parse_int<std::size_t>(key, v);
  else if (key == "synth.subjects") c.synthetic.subjects = parse_int<std::size_t>(key, v);
  else if (key == "synth.noise") c.synthetic.noise = parse_real(key, v);
  else if (key == "synth.target_noise") c.synthetic.target_noise = parse_real(key, v);
  else if (key == "synth.target_sparsity") c.synthetic.target_sparsity = parse_int<std::size_t>(key, v);
  else if (key == "synth.seed") {
    c.synthetic.seed = parse_int<std::uint64_t>(key, v);
    c.synthetic_seed_set = true;
  } else {
    throw DimensionError("unknown setting '" + key + "'");
  }
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DimensionError("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "tasks = " << join(c.task_files) << "\n"
      << "groupings = " << join(c.grouping_files) << "\n"
      << "targets = " << c.targets_file << "\n"
      << "lambda = " << format_double(c.mscc.lambda) << "\n"
      << "epochs = " << c.mscc.epochs << "\n"
      << "ccd_full_passes = " << c.mscc.ccd_full_passes << "\n"
      << "ccd_support_passes = " << c.mscc.ccd_support_passes << "\n"
      << "shared_atoms = " << c.mscc.shared_atoms << "\n"
      << "individual_atoms = " << join(c.mscc.individual_atoms) << "\n"
      << "shuffle_samples = " << (c.mscc.shuffle_samples ? "true" : "false") << "\n"
      << "mode = " << to_string(c.mode) << "\n"
      << "pool = " << to_string(c.pool) << "\n"
      << "features = " << to_string(c.features) << "\n"
      << "regression = " << to_string(c.regression) << "\n"
      << "cv_folds = " << c.cv_folds << "\n"
      << "cv_grid_min = " << format_double(c.cv_grid_min) << "\n"
      << "cv_grid_max = " << format_double(c.cv_grid_max) << "\n"
      << "cv_grid_points = " << c.cv_grid_points << "\n"
      << "encode_tol = " << format_double(c.encode_tol) << "\n"
      << "encode_max_sweeps = " << c.encode_max_sweeps << "\n"
      << "nmse_std = " << to_string(c.nmse_std) << "\n"
      << "split = " << format_double(c.split) << "\n"
      << "repeats = " << c.repeats << "\n"
      << "seed = " << c.seed << "\n"
      << "output = " << c.output << "\n"
      << "synth.tasks = " << c.synthetic.tasks << "\n"
      << "synth.dim = " << c.synthetic.dim << "\n"
      << "synth.shared_atoms = " << c.synthetic.shared_atoms << "\n"
      << "synth.individual_atoms = " << join(c.synthetic.individual_atoms) << "\n"
      << "synth.sparsity = " << c.synthetic.sparsity << "\n"
      << "synth.samples = " << c.synthetic.samples << "\n"
      << "synth.subjects = " << c.synthetic.subjects << "\n"
      << "synth.noise = " << format_double(c.synthetic.noise) << "\n"
      << "synth.target_noise = " << format_double(c.synthetic.target_noise) << "\n"
      << "synth.target_sparsity = " << c.synthetic.target_sparsity << "\n";
  if (c.synthetic_seed_set) out << "synth.seed = " << c.synthetic.seed << "\n";
  return out.str();
}

}  // namespace mtdl
