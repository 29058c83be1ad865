#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fdsgp {

/// Ordered plain-text `key = value` document.
///
/// Lines starting with '#' are comments. Keys keep insertion order so a
/// document written twice from the same object is byte-identical. Doubles are
/// written with 17 significant digits, which round-trips every IEEE double.
class KeyValueDocument {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, std::span<const double> values);

  bool contains(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write(std::ostream& out) const;
  static KeyValueDocument parse(std::istream& in);
  static KeyValueDocument read_file(const std::string& path);
  void write_file(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace fdsgp
