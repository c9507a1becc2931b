#include "mtdl/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mtdl {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'T', 'D', 'L', 'M', 'A', 'T', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffU));
}

std::uint64_t get_u64(const std::string& in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool try_parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> nonblank_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  if (!try_parse_double(text, v)) throw FormatError("not a number: '" + text + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

void save_matrix(const std::filesystem::path& path, const Matrix& m, MatrixFormat format) {
  std::string out;
  if (format == MatrixFormat::Binary) {
    out.reserve(24 + 8 * m.size());
    out.append(kMagic.data(), kMagic.size());
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    for (double v : m.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  } else {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      auto column = m.col(c);
      for (std::size_t r = 0; r < column.size(); ++r) {
        if (r) out.push_back(',');
        out += format_double(column[r]);
      }
      out.push_back('\n');
    }
  }
  write_text(path, out);
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  save_matrix(path, m, path.extension() == ".csv" ? MatrixFormat::Csv : MatrixFormat::Binary);
}

Matrix load_matrix(const std::filesystem::path& path) {
  const std::string data = read_text(path);
  const std::string where = "'" + path.string() + "'";
  if (data.empty()) throw FormatError(where + " is empty");

  if (data.size() >= kMagic.size() && std::memcmp(data.data(), kMagic.data(), kMagic.size()) == 0) {
    if (data.size() < 24) throw FormatError(where + ": truncated binary header");
    const std::uint64_t rows = get_u64(data, 8);
    const std::uint64_t cols = get_u64(data, 16);
    if (rows != 0 && cols > (data.size() - 24) / 8 / rows + 1) {
      throw FormatError(where + ": header claims more values than the file holds");
    }
    if (data.size() != 24 + 8 * rows * cols) {
      throw FormatError(where + ": expected " + std::to_string(rows * cols) + " values");
    }
    std::vector<double> values(rows * cols);
    for (std::size_t k = 0; k < values.size(); ++k) {
      values[k] = std::bit_cast<double>(get_u64(data, 24 + 8 * k));
    }
    return Matrix(rows, cols, std::move(values));
  }

  auto lines = nonblank_lines(data);
  if (lines.empty()) throw FormatError(where + " has no data lines");
  std::size_t first = 0;
  {
    auto fields = split_csv_line(lines.front());
    double probe = 0.0;
    bool numeric = true;
    for (const auto& f : fields) numeric = numeric && try_parse_double(f, probe);
    if (!numeric) first = 1;
  }
  if (first >= lines.size()) throw FormatError(where + " has a header but no data");
  const std::size_t p = split_csv_line(lines[first]).size();
  const std::size_t n = lines.size() - first;
  Matrix m(p, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto fields = split_csv_line(lines[first + i]);
    if (fields.size() != p) {
      throw FormatError(where + " line " + std::to_string(first + i + 1) + ": expected " +
                        std::to_string(p) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t r = 0; r < p; ++r) {
      if (!try_parse_double(fields[r], m(r, i))) {
        throw FormatError(where + " line " + std::to_string(first + i + 1) + ": bad number '" +
                          fields[r] + "'");
      }
    }
  }
  return m;
}

void save_grouping(const std::filesystem::path& path, const PatchGrouping& grouping) {
  std::string out = "patch,subject\n";
  for (std::size_t i = 0; i < grouping.patch_count(); ++i) {
    out += std::to_string(i) + "," + grouping.subject_of(i) + "\n";
  }
  write_text(path, out);
}

PatchGrouping load_grouping(const std::filesystem::path& path) {
  auto lines = nonblank_lines(read_text(path));
  const std::string where = "'" + path.string() + "'";
  if (lines.empty() || split_csv_line(lines.front()) != std::vector<std::string>{"patch", "subject"}) {
    throw FormatError(where + ": expected header 'patch,subject'");
  }
  std::vector<std::string> subject_of(lines.size() - 1);
  std::vector<bool> seen(subject_of.size(), false);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto fields = split_csv_line(lines[k]);
    if (fields.size() != 2 || fields[1].empty()) {
      throw FormatError(where + " line " + std::to_string(k + 1) + ": expected 'patch,subject'");
    }
    std::size_t patch = 0;
    auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), patch);
    if (ec != std::errc() || ptr != fields[0].data() + fields[0].size() ||
        patch >= subject_of.size() || seen[patch]) {
      throw FormatError(where + " line " + std::to_string(k + 1) + ": bad or repeated patch index");
    }
    seen[patch] = true;
    subject_of[patch] = fields[1];
  }
  return PatchGrouping(std::move(subject_of));
}

std::size_t LabeledTable::row_index(const std::string& name) const {
  for (std::size_t i = 0; i < row_names.size(); ++i) {
    if (row_names[i] == name) return i;
  }
  throw FormatError("no row named '" + name + "'");
}

std::size_t LabeledTable::col_index(const std::string& name) const {
  for (std::size_t j = 0; j < col_names.size(); ++j) {
    if (col_names[j] == name) return j;
  }
  throw FormatError("no column named '" + name + "'");
}

void save_table(const std::filesystem::path& path, const LabeledTable& table) {
  if (table.row_names.size() != table.values.rows() || table.col_names.size() != table.values.cols()) {
    throw DimensionError("table labels do not match its values");
  }
  std::string out = "subject";
  for (const auto& c : table.col_names) out += "," + c;
  out.push_back('\n');
  for (std::size_t i = 0; i < table.values.rows(); ++i) {
    out += table.row_names[i];
    for (std::size_t j = 0; j < table.values.cols(); ++j) out += "," + format_double(table.values(i, j));
    out.push_back('\n');
  }
  write_text(path, out);
}

LabeledTable load_table(const std::filesystem::path& path) {
  auto lines = nonblank_lines(read_text(path));
  const std::string where = "'" + path.string() + "'";
  if (lines.empty()) throw FormatError(where + " is empty");
  auto header = split_csv_line(lines.front());
  if (header.size() < 2 || header.front() != "subject") {
    throw FormatError(where + ": header must start with 'subject' and name at least one column");
  }
  LabeledTable table;
  table.col_names.assign(header.begin() + 1, header.end());
  table.values = Matrix(lines.size() - 1, table.col_names.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto fields = split_csv_line(lines[i]);
    if (fields.size() != header.size()) {
      throw FormatError(where + " line " + std::to_string(i + 1) + ": wrong field count");
    }
    table.row_names.push_back(fields.front());
    for (std::size_t j = 1; j < fields.size(); ++j) {
      if (!try_parse_double(fields[j], table.values(i - 1, j - 1))) {
        throw FormatError(where + " line " + std::to_string(i + 1) + ": bad number '" + fields[j] + "'");
      }
    }
  }
  return table;
}

void save_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::string out = "metric,task,mean,std\n";
  for (const auto& r : rows) {
    out += r.metric + "," + r.task + "," + format_double(r.mean) + "," + format_double(r.std) + "\n";
  }
  write_text(path, out);
}

std::vector<ResultRow> load_results(const std::filesystem::path& path) {
  auto lines = nonblank_lines(read_text(path));
  const std::string where = "'" + path.string() + "'";
  if (lines.empty() ||
      split_csv_line(lines.front()) != std::vector<std::string>{"metric", "task", "mean", "std"}) {
    throw FormatError(where + ": expected header 'metric,task,mean,std'");
  }
  std::vector<ResultRow> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto f = split_csv_line(lines[k]);
    if (f.size() != 4) throw FormatError(where + " line " + std::to_string(k + 1) + ": expected 4 fields");
    rows.push_back({f[0], f[1], parse_double(f[2]), parse_double(f[3])});
  }
  return rows;
}

}  // namespace mtdl
