#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hprobe::csv {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

using Row = std::vector<std::string>;

struct Table {
  std::vector<std::string> comments;  // written as leading "# " lines
  Row header;
  std::vector<Row> rows;
};

void write(const std::filesystem::path& path, const Table& table);
Table read(const std::filesystem::path& path);

// Numeric column by header name; throws ValidationError if missing or unparsable.
std::vector<double> column(const Table& table, const std::string& name);

double parse_double(const std::string& s);

}  // namespace hprobe::csv
