#include "lorentz/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lorentz/errors.hpp"

namespace lorentz {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    if (lead) *lead = s.size();
    return "";
  }
  const std::size_t e = s.find_last_not_of(" \t\r");
  if (lead) *lead = b;
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& file, const std::filesystem::path& base_dir) {
  Config c;
  c.parse_into(text, file, base_dir, 0);
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path.string() + "'", 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string(), path.parent_path());
}

void Config::parse_into(const std::string& text, const std::string& file, const std::filesystem::path& base_dir,
                        int depth) {
  if (depth > 8) throw ParseError("include nesting too deep in " + file, 0, 0);
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    const std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    if (trim(line).empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      std::size_t lead = 0;
      trim(line, &lead);
      throw ParseError(file + ": expected 'key = value'", line_no, static_cast<int>(lead) + 1);
    }
    std::size_t klead = 0, vlead = 0;
    const std::string key = trim(line.substr(0, eq), &klead);
    const std::string value = trim(line.substr(eq + 1), &vlead);
    if (!valid_key(key)) throw ParseError(file + ": invalid key '" + key + "'", line_no, static_cast<int>(klead) + 1);
    const int vcol = static_cast<int>(eq + 1 + vlead) + 1;
    if (value.empty()) throw ParseError(file + ": missing value for '" + key + "'", line_no, vcol);
    if (key == "include") {
      const std::filesystem::path p = base_dir / value;
      std::ifstream inc(p);
      if (!inc) throw ParseError(file + ": cannot open include '" + value + "'", line_no, vcol);
      std::stringstream ss;
      ss << inc.rdbuf();
      parse_into(ss.str(), p.string(), p.parent_path(), depth + 1);
      continue;
    }
    entries_[key] = Entry{value, file, line_no, vcol};
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ParseError("invalid key '" + key + "'", 0, 1);
  entries_[key] = Entry{value, "<command line>", 0, static_cast<int>(key.size()) + 2};
}

void Config::value_error(const Entry& e, const std::string& what) const {
  throw ParseError(e.file + ": " + what + " '" + e.value + "'", e.line, e.column);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second.value;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const auto v = to_double(it->second.value);
  if (!v) value_error(it->second, "expected a number for " + key + ", got");
  return *v;
}

long Config::get_long(const std::string& key, long fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& s = it->second.value;
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
    value_error(it->second, "expected an integer for " + key + ", got");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& s = it->second.value;
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  value_error(it->second, "expected a boolean for " + key + ", got");
}

Mat3 parse_matrix3(const std::string& text) {
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == ',' ||
                                 text[pos] == '[' || text[pos] == ']' || text[pos] == ';'))
      ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end])) && text[end] != ',' &&
           text[end] != ']' && text[end] != ';')
      ++end;
    const auto v = to_double(text.substr(pos, end - pos));
    if (!v) throw ParseError("invalid number '" + text.substr(pos, end - pos) + "' in matrix", 1, int(pos) + 1);
    vals.push_back(*v);
    pos = end;
  }
  if (vals.size() != 9) throw ParseError("expected 9 numbers, got " + std::to_string(vals.size()), 1, 1);
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = vals[i];
  return m;
}

void write_metric_csv(std::ostream& os, const MetricPatch& patch) {
  const GridSpec& g = patch.grid();
  const Domain& d = g.domain;
  os << "domain," << format_double(d.x0) << ',' << format_double(d.x1) << ',' << format_double(d.y0) << ','
     << format_double(d.y1) << ',' << int(d.periodic_x) << ',' << int(d.periodic_y) << '\n';
  os << "resolution," << g.nx << ',' << g.ny << '\n';
  const auto jets = patch.node_jets();
  const char* names[3] = {"E", "F", "G"};
  for (int c = 0; c < 3; ++c) {
    os << names[c] << '\n';
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const Mat2& m = jets[j * g.nx + i].g;
        const double v = c == 0 ? m(0, 0) : c == 1 ? m(0, 1) : m(1, 1);
        os << (i ? "," : "") << format_double(v);
      }
      os << '\n';
    }
  }
}

MetricPatch read_metric_csv(std::istream& is) {
  std::string line;
  int line_no = 0;
  auto next = [&](const char* what) {
    if (!std::getline(is, line)) throw ParseError(std::string("unexpected end of metric CSV, expected ") + what, line_no + 1, 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  auto fields = [&](const std::string& s) {
    std::vector<std::pair<std::string, int>> out;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = s.find(',', start);
      out.emplace_back(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start), int(start) + 1);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  };
  auto number = [&](const std::pair<std::string, int>& f) {
    const auto v = to_double(trim(f.first));
    if (!v) throw ParseError("invalid number '" + f.first + "'", line_no, f.second);
    return *v;
  };
  next("domain header");
  auto h = fields(line);
  if (h.size() != 7 || h[0].first != "domain") throw ParseError("expected 'domain,x0,x1,y0,y1,px,py'", line_no, 1);
  Domain d{number(h[1]), number(h[2]), number(h[3]), number(h[4]), number(h[5]) != 0, number(h[6]) != 0};
  next("resolution header");
  h = fields(line);
  if (h.size() != 3 || h[0].first != "resolution") throw ParseError("expected 'resolution,nx,ny'", line_no, 1);
  const double nxd = number(h[1]), nyd = number(h[2]);
  if (nxd < 2 || nyd < 2 || nxd != std::floor(nxd) || nyd != std::floor(nyd) || nxd * nyd > 1e8)
    throw ParseError("invalid resolution", line_no, h[1].second);
  const GridSpec grid{d, int(nxd), int(nyd)};
  GridArray comp[3];
  const char* names[3] = {"E", "F", "G"};
  for (int c = 0; c < 3; ++c) {
    next(names[c]);
    if (trim(line) != names[c]) throw ParseError(std::string("expected block header '") + names[c] + "'", line_no, 1);
    comp[c].resize(grid.nx, grid.ny);
    for (int j = 0; j < grid.ny; ++j) {
      next("grid row");
      const auto row = fields(line);
      if (static_cast<int>(row.size()) != grid.nx)
        throw ParseError("expected " + std::to_string(grid.nx) + " values", line_no, 1);
      for (int i = 0; i < grid.nx; ++i) comp[c](i, j) = number(row[i]);
    }
  }
  return MetricPatch::from_samples(grid, comp[0], comp[1], comp[2]);
}

void write_grid_csv(std::ostream& os, const GridSpec& grid, const std::vector<std::string>& names,
                    const std::vector<const GridArray*>& fields) {
  os << "x,y";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 p = grid.point(i, j);
      os << format_double(p.x()) << ',' << format_double(p.y());
      for (const GridArray* f : fields) os << ',' << format_double((*f)(i, j));
      os << '\n';
    }
}

void write_rate_csv(std::ostream& os, const std::vector<RateRow>& rows) {
  os << "n,c0,c1,c2,ratio0,ratio1\n";
  for (const RateRow& r : rows)
    os << r.n << ',' << format_double(r.c0) << ',' << format_double(r.c1) << ',' << format_double(r.c2) << ','
       << format_double(r.ratio0) << ',' << format_double(r.ratio1) << '\n';
}

void write_orbit_csv(std::ostream& os, const OrbitProbe& probe) {
  os << "L,min_displacement\n";
  for (const auto& [L, d] : probe.table) os << L << ',' << format_double(d) << '\n';
}

}  // namespace lorentz
