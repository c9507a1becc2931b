#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtdl/encode.hpp"
#include "mtdl/linalg.hpp"

namespace mtdl {

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MatrixFormat { Binary, Csv };

/// Binary layout: the 8 bytes "MTDLMAT1", little-endian u64 rows and cols,
/// then rows * cols little-endian doubles in column-major order.
/// CSV layout: one matrix column (sample) per line, optional header line.
void save_matrix(const std::filesystem::path& path, const Matrix& m, MatrixFormat format);
/// Picks CSV for a ".csv" extension, binary otherwise.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
/// Detects the format from the magic bytes.
Matrix load_matrix(const std::filesystem::path& path);

/// CSV with header "patch,subject"; one line per patch, patch indices 0..n-1.
void save_grouping(const std::filesystem::path& path, const PatchGrouping& grouping);
PatchGrouping load_grouping(const std::filesystem::path& path);

/// A matrix with named rows (subjects) and named columns. CSV with a header
/// "subject,<col>,<col>,..." and one line per row.
struct LabeledTable {
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  Matrix values;

  std::size_t row_index(const std::string& name) const;
  std::size_t col_index(const std::string& name) const;
};

void save_table(const std::filesystem::path& path, const LabeledTable& table);
LabeledTable load_table(const std::filesystem::path& path);

/// One line of a results file: "metric,task,mean,std".
struct ResultRow {
  std::string metric;
  std::string task;
  double mean = 0.0;
  double std = 0.0;

  bool operator==(const ResultRow&) const = default;
};

void save_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> load_results(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
/// Whole-string strict parse; throws FormatError.
double parse_double(const std::string& text);

std::vector<std::string> split_csv_line(const std::string& line);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mtdl
