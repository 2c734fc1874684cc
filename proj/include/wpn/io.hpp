#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace wpn {

/// Shortest decimal text that parses back to the same double ("nan", "inf", "-inf" for non-finite).
std::string format_double(double v);
double parse_double(const std::string& s);

/// Rectangular table of text fields with a mandatory header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Table() = default;
  explicit Table(std::vector<std::string> h) : header(std::move(h)) {}

  static std::string field(double v) { return format_double(v); }
  static std::string field(int v) { return std::to_string(v); }
  static std::string field(long v) { return std::to_string(v); }
  static std::string field(long long v) { return std::to_string(v); }
  static std::string field(unsigned long v) { return std::to_string(v); }
  static std::string field(unsigned long long v) { return std::to_string(v); }
  static std::string field(const char* v) { return v; }
  static std::string field(std::string v) { return v; }

  template <typename... Args>
  void add(Args&&... args) {
    rows.push_back({field(std::forward<Args>(args))...});
  }
  std::size_t column(const std::string& name) const;
};

/// RFC 4180 text with LF line endings; fields are quoted only when needed.
std::string to_csv(const Table& t);
Table parse_csv(const std::string& text);
void emit_csv(const Table& t, const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Flat key-value configuration with one level of [sections]:
///
///   # comment
///   name = value
///   [grid]
///   n_cells = 256        ->  key "grid.n_cells"
///
/// Keys keep their insertion order; serialization groups them by section.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);
  std::string serialize() const;

  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, const std::vector<double>& values);

  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  bool operator==(const Config& o) const { return entries_ == o.entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace wpn
