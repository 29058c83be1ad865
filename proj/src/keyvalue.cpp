#include "fdsgp/keyvalue.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fdsgp/errors.hpp"

namespace fdsgp {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw DataError("expected a number, got an empty field");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) {
    throw DataError("not a number: '" + t + "'");
  }
  return v;
}

void KeyValueDocument::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void KeyValueDocument::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValueDocument::set(const std::string& key, long long value) {
  set(key, std::to_string(value));
}

void KeyValueDocument::set(const std::string& key, std::span<const double> values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ' ';
    joined += format_double(values[i]);
  }
  set(key, joined);
}

bool KeyValueDocument::contains(const std::string& key) const { return find(key).has_value(); }

std::optional<std::string> KeyValueDocument::find(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const std::string& KeyValueDocument::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw DataError("missing key '" + key + "'");
}

double KeyValueDocument::get_double(const std::string& key) const {
  try {
    return parse_double(get(key));
  } catch (const DataError& e) {
    throw DataError("key '" + key + "': " + e.what());
  }
}

long long KeyValueDocument::get_int(const std::string& key) const {
  const std::string& text = get(key);
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0') throw DataError("key '" + key + "': not an integer");
  return v;
}

std::vector<double> KeyValueDocument::get_doubles(const std::string& key) const {
  std::istringstream in(get(key));
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_double(token));
  return out;
}

void KeyValueDocument::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

KeyValueDocument KeyValueDocument::parse(std::istream& in) {
  KeyValueDocument doc;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw DataError("line " + std::to_string(line_no) + ": empty key");
    doc.set(key, trim(t.substr(eq + 1)));
  }
  return doc;
}

KeyValueDocument KeyValueDocument::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse(in);
}

void KeyValueDocument::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write(out);
}

}  // namespace fdsgp
