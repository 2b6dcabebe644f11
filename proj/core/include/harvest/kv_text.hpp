#pragma once

#include "harvest/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace harvest {

/// Ordered `key = value` document.
///
/// Grammar, one entry per line:
///
///     # comment
///     key = value
///
/// Keys are dotted identifiers (`pepper.3.centroid`). Values are free text
/// up to the end of the line with surrounding whitespace trimmed. Vectors
/// are space-separated numbers. Reals are written with 17 significant
/// digits so that parse(write(x)) reproduces x exactly, and writing the
/// parsed document again gives the same bytes.
class KvDocument {
 public:
  static KvDocument parse(std::string_view text);
  static KvDocument load(const std::string& path);

  std::string to_string() const;
  void save(const std::string& path) const;

  void set(const std::string& key, std::string value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, bool value);
  void set(const std::string& key, const Vec3& value);
  void set(const std::string& key, const Vec2& value);
  void set(const std::string& key, const Quat& value);  // w x y z
  void comment(const std::string& text);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  Vec3 get_vec3(const std::string& key) const;
  Vec2 get_vec2(const std::string& key) const;
  Quat get_quat(const std::string& key) const;
  std::vector<double> get_reals(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::string get(const std::string& key, const std::string& fallback) const;

  std::vector<std::string> keys() const;

 private:
  struct Line {
    std::string key;  // empty for comments
    std::string value;
  };
  std::vector<Line> lines_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string format_real(double v);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace harvest
