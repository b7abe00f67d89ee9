#include "hprobe/fdtd/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "hprobe/core/csv.hpp"
#include "hprobe/core/error.hpp"

namespace hprobe::fdtd {

namespace {

void put_f64(std::ostream& os, double v) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("binary file truncated");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

void put_header(std::ostream& os, const std::string& text) {
  if (text.size() > binary_header_size) throw ValidationError("binary header too long: " + text);
  std::string h = text;
  h.resize(binary_header_size, ' ');
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
}

// "HPROBE <KIND> key=value ..." -> values by key.
std::map<std::string, std::string> get_header(std::istream& is, const std::string& kind) {
  std::string h(binary_header_size, '\0');
  if (!is.read(h.data(), static_cast<std::streamsize>(h.size()))) throw ValidationError("binary header truncated");
  std::istringstream ss(h);
  std::string magic, k;
  ss >> magic >> k;
  if (magic != "HPROBE" || k != kind) throw ValidationError("unexpected binary header: " + h);
  std::map<std::string, std::string> kv;
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError("binary header missing '" + key + "'");
  return it->second;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path.string());
  return is;
}

}  // namespace

void write_permittivity_csv(const std::filesystem::path& path, const Grid2D& eps) {
  csv::Table t;
  t.header.push_back("z_m");
  for (std::size_t i = 0; i < eps.nx; ++i) t.header.push_back(csv::format_double(eps.x(i)));
  for (std::size_t k = 0; k < eps.nz; ++k) {
    csv::Row r{csv::format_double(eps.z(k))};
    for (std::size_t i = 0; i < eps.nx; ++i) r.push_back(csv::format_double(eps.at(i, k)));
    t.rows.push_back(std::move(r));
  }
  csv::write(path, t);
}

Grid2D read_permittivity_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  if (t.header.size() < 2 || t.header[0] != "z_m" || t.rows.empty())
    throw ValidationError("not a permittivity CSV: " + path.string());
  Grid2D g;
  g.nx = t.header.size() - 1;
  g.nz = t.rows.size();
  g.step = 2.0 * csv::parse_double(t.header[1]);  // x_0 = step / 2 exactly
  g.data.resize(g.nx * g.nz);
  for (std::size_t k = 0; k < g.nz; ++k) {
    if (t.rows[k].size() != g.nx + 1) throw ValidationError("ragged permittivity CSV row");
    for (std::size_t i = 0; i < g.nx; ++i) g.at(i, k) = csv::parse_double(t.rows[k][i + 1]);
  }
  return g;
}

void write_field_csv(const std::filesystem::path& path, const FieldMap2D& field) {
  field.validate();
  csv::Table t;
  t.header = {"part", "z_m"};
  for (double x : field.coordinates) t.header.push_back(csv::format_double(x));
  csv::Row re{"re", csv::format_double(field.plane_position)}, im{"im", csv::format_double(field.plane_position)};
  for (const auto& a : field.amplitude) {
    re.push_back(csv::format_double(a.real()));
    im.push_back(csv::format_double(a.imag()));
  }
  t.rows = {re, im, {"frequency_hz", csv::format_double(field.frequency)}};
  csv::write(path, t);
}

FieldMap2D read_field_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  if (t.header.size() < 2 || t.header[0] != "part" || t.rows.size() != 3)
    throw ValidationError("not a field-map CSV: " + path.string());
  FieldMap2D f;
  const std::size_t n = t.header.size() - 2;
  for (std::size_t i = 0; i < n; ++i) f.coordinates.push_back(csv::parse_double(t.header[i + 2]));
  const auto& re = t.rows[0];
  const auto& im = t.rows[1];
  if (re.size() != n + 2 || im.size() != n + 2) throw ValidationError("ragged field-map CSV row");
  f.plane_position = csv::parse_double(re[1]);
  for (std::size_t i = 0; i < n; ++i) f.amplitude.emplace_back(csv::parse_double(re[i + 2]), csv::parse_double(im[i + 2]));
  f.frequency = csv::parse_double(t.rows[2].at(1));
  f.validate();
  return f;
}

void write_permittivity_binary(const std::filesystem::path& path, const Grid2D& eps) {
  auto os = open_out(path);
  put_header(os, "HPROBE EPS2D nx=" + std::to_string(eps.nx) + " nz=" + std::to_string(eps.nz) +
                     " dx=" + csv::format_double(eps.step));
  for (double v : eps.data) put_f64(os, v);
}

Grid2D read_permittivity_binary(const std::filesystem::path& path) {
  auto is = open_in(path);
  const auto kv = get_header(is, "EPS2D");
  Grid2D g;
  g.nx = std::stoul(need(kv, "nx"));
  g.nz = std::stoul(need(kv, "nz"));
  g.step = csv::parse_double(need(kv, "dx"));
  g.data.resize(g.nx * g.nz);
  for (double& v : g.data) v = get_f64(is);
  return g;
}

void write_field_binary(const std::filesystem::path& path, const FieldMap2D& field) {
  field.validate();
  auto os = open_out(path);
  put_header(os, "HPROBE FIELD1D n=" + std::to_string(field.coordinates.size()) +
                     " f=" + csv::format_double(field.frequency) + " z=" + csv::format_double(field.plane_position));
  for (double x : field.coordinates) put_f64(os, x);
  for (const auto& a : field.amplitude) {
    put_f64(os, a.real());
    put_f64(os, a.imag());
  }
}

FieldMap2D read_field_binary(const std::filesystem::path& path) {
  auto is = open_in(path);
  const auto kv = get_header(is, "FIELD1D");
  FieldMap2D f;
  const std::size_t n = std::stoul(need(kv, "n"));
  f.frequency = csv::parse_double(need(kv, "f"));
  f.plane_position = csv::parse_double(need(kv, "z"));
  for (std::size_t i = 0; i < n; ++i) f.coordinates.push_back(get_f64(is));
  for (std::size_t i = 0; i < n; ++i) {
    const double re = get_f64(is);
    f.amplitude.emplace_back(re, get_f64(is));
  }
  f.validate();
  return f;
}

}  // namespace hprobe::fdtd
