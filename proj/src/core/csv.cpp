#include "hprobe/core/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hprobe/core/error.hpp"

namespace hprobe::csv {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ValidationError("cannot format double");
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) throw ValidationError("not a number: '" + s + "'");
  return v;
}

void write(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());
  auto emit = [&out](const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  };
  for (const auto& c : table.comments) out << "# " << c << '\n';
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  if (!out) throw ValidationError("write failed: " + path.string());
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for reading: " + path.string());
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line[0] == '#') {
      table.comments.push_back(line.size() > 2 ? line.substr(2) : std::string());
      continue;
    }
    Row row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (first) {
      table.header = std::move(row);
      first = false;
    } else {
      table.rows.push_back(std::move(row));
    }
  }
  if (first) throw ValidationError("empty csv: " + path.string());
  return table;
}

std::vector<double> column(const Table& table, const std::string& name) {
  std::size_t idx = table.header.size();
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == name) idx = i;
  if (idx == table.header.size()) throw ValidationError("csv has no column '" + name + "'");
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    if (idx >= r.size()) throw ValidationError("short csv row for column '" + name + "'");
    out.push_back(parse_double(r[idx]));
  }
  return out;
}

}  // namespace hprobe::csv
