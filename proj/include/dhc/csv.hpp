#pragma once

#include <istream>
#include <string>
#include <vector>

namespace dhc {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws SchemaError when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

// Minimal reader for the unquoted comma-separated files this project writes.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

std::string join_csv(const std::vector<std::string>& fields);

}  // namespace dhc
