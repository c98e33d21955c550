#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace hdsdm::cli {

/// Delimited text with a header row. `lines[i]` is the 1-based file line of
/// `rows[i]`.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;

  /// Column index by name; throws a specification error when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

Table read_table(const std::string& path, char delimiter = ',');

/// Parses a full field as a finite double; throws a validation error naming
/// the file line and column on failure.
double parse_number(const std::string& field, int line, const std::string& column);

/// Writes a header and numeric rows with round-trip precision.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);
  static std::string number(double x);

 private:
  std::ofstream out_;
};

}  // namespace hdsdm::cli
