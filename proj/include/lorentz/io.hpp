#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lorentz/approx.hpp"
#include "lorentz/metric.hpp"
#include "lorentz/moduli.hpp"
#include "lorentz/psl2r.hpp"

namespace lorentz {

/// 17 significant digits: round-trips every double.
std::string format_double(double v);

/// key = value text with `#` comments and `include = path` (relative to the including file).
class Config {
 public:
  struct Entry {
    std::string value;
    std::string file;
    int line = 0;
    int column = 0;  // column of the value
  };

  static Config parse(const std::string& text, const std::string& file = "<string>",
                      const std::filesystem::path& base_dir = ".");
  static Config load(const std::filesystem::path& path);

  /// Later assignments override earlier ones (so `--set` can follow a file).
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

 private:
  void parse_into(const std::string& text, const std::string& file, const std::filesystem::path& base_dir, int depth);
  [[noreturn]] void value_error(const Entry& e, const std::string& what) const;
  std::map<std::string, Entry> entries_;
};

/// Row-major 3×3 matrix from nine whitespace/comma separated numbers.
Mat3 parse_matrix3(const std::string& text);

/// Grid metric CSV: `domain,x0,x1,y0,y1,px,py` / `resolution,nx,ny`, then blocks `E`, `F`, `G`
/// of ny rows with nx values each (row j is y = y_j).
void write_metric_csv(std::ostream& os, const MetricPatch& patch);
MetricPatch read_metric_csv(std::istream& is);

/// Long-format grid CSV: x,y,<name>... one row per node (x fastest).
void write_grid_csv(std::ostream& os, const GridSpec& grid, const std::vector<std::string>& names,
                    const std::vector<const GridArray*>& fields);

void write_rate_csv(std::ostream& os, const std::vector<RateRow>& rows);
void write_orbit_csv(std::ostream& os, const OrbitProbe& probe);

}  // namespace lorentz
