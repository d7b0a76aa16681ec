#ifndef LACAL_IO_HPP
#define LACAL_IO_HPP

#include "lacal/common.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace lacal {

/// Malformed input file or configuration; the message carries file and line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest-safe round-trip text: 17 significant digits, NA for NaN.
std::string format_number(double value);

struct CsvTable {
  std::vector<std::string> header;
  DesignMatrix values;

  Index column(const std::string& name) const;
};

/// Header line then numeric rows, comma separated. Blank lines and lines
/// starting with '#' are skipped.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const DesignMatrix& values);

/// Flat key=value configuration. '#' starts a comment; whitespace around keys
/// and values is ignored. Relative paths resolve against the file's directory.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text, const std::string& origin,
                      const std::filesystem::path& base_dir = std::filesystem::path("."));

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::filesystem::path get_path(const std::string& key) const;

  /// Throws ParseError naming the line of the first key not in `known`.
  void check_known(const std::set<std::string>& known) const;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::string origin_;
  std::filesystem::path base_dir_;
};

}  // namespace lacal

#endif  // LACAL_IO_HPP
