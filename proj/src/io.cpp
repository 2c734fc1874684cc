#include "wpn/io.hpp"

#include "wpn/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wpn {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  require(res.ec == std::errc() && res.ptr == last, ErrorCode::invalid_parameter, "not a number: '" + s + "'");
  return v;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorCode::invalid_parameter, "no column named " + name);
}

namespace {

void put_field(std::string& out, const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) {
    out += f;
    return;
  }
  out += '"';
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

void put_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    put_field(out, row[i]);
  }
  out += '\n';
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string to_csv(const Table& t) {
  require(!t.header.empty(), ErrorCode::invalid_parameter, "CSV tables need a header");
  std::string out;
  put_row(out, t.header);
  for (const auto& r : t.rows) {
    require(r.size() == t.header.size(), ErrorCode::invalid_parameter, "ragged CSV row");
    put_row(out, r);
  }
  return out;
}

Table parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  require(!quoted, ErrorCode::invalid_parameter, "unterminated quoted CSV field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorCode::invalid_parameter, "CSV without header");
  Table t(rows.front());
  t.rows.assign(rows.begin() + 1, rows.end());
  for (const auto& r : t.rows) require(r.size() == t.header.size(), ErrorCode::invalid_parameter, "ragged CSV row");
  return t;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(bool(out), ErrorCode::io_error, "cannot open " + path + " for writing");
  out.write(text.data(), std::streamsize(text.size()));
  out.close();
  require(bool(out), ErrorCode::io_error, "write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorCode::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit_csv(const Table& t, const std::string& path) { write_text(path, to_csv(t)); }

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, ErrorCode::invalid_parameter,
              "bad section header on line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      require(section.find('.') == std::string::npos, ErrorCode::invalid_parameter, "nested sections are not supported");
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::invalid_parameter, "expected key = value on line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    require(!key.empty(), ErrorCode::invalid_parameter, "empty key on line " + std::to_string(lineno));
    c.set(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) { return parse(read_text(path)); }

std::string Config::serialize() const {
  // Top-level keys first, then one block per section in order of first appearance.
  std::vector<std::string> sections{""};
  for (const auto& [k, v] : entries_) {
    const auto dot = k.find('.');
    const std::string s = dot == std::string::npos ? "" : k.substr(0, dot);
    if (std::find(sections.begin(), sections.end(), s) == sections.end()) sections.push_back(s);
  }
  std::string out;
  for (const auto& s : sections) {
    if (!s.empty()) out += (out.empty() ? "[" : "\n[") + s + "]\n";
    for (const auto& [k, v] : entries_) {
      const auto dot = k.find('.');
      const std::string ks = dot == std::string::npos ? "" : k.substr(0, dot);
      if (ks != s) continue;
      out += (dot == std::string::npos ? k : k.substr(dot + 1)) + " = " + v + "\n";
    }
  }
  return out;
}

bool Config::has(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.first == key) return true;
  return false;
}

void Config::set(const std::string& key, std::string value) {
  for (auto& e : entries_)
    if (e.first == key) {
      e.second = std::move(value);
      return;
    }
  entries_.emplace_back(key, std::move(value));
}

void Config::set(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + format_double(values[i]);
  set(key, s);
}

const std::string& Config::get(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.first == key) return e.second;
  throw Error(ErrorCode::invalid_parameter, "missing config key " + key);
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  try {
    return parse_double(get(key));
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_parameter, key + ": " + e.what());
  }
}

int Config::get_int(const std::string& key) const {
  const std::string& s = get(key);
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCode::invalid_parameter,
          key + ": not an integer: '" + s + "'");
  return v;
}

std::uint64_t Config::get_uint(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCode::invalid_parameter,
          key + ": not an unsigned integer: '" + s + "'");
  return v;
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  std::istringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item));
  }
  return out;
}

}  // namespace wpn
