#include "harvest/kv_text.hpp"

#include "harvest/errors.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace harvest {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& text, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE) {
    throw ParseError("key '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw ArgumentError("failed writing '" + path + "'");
}

KvDocument KvDocument::parse(std::string_view text) {
  KvDocument doc;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = (nl == std::string_view::npos) ? std::string_view{} : text.substr(nl + 1);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      doc.comment(std::string(trim(line.substr(1))));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty key");
    if (doc.has(key)) throw ParseError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    doc.set(key, std::string(trim(line.substr(eq + 1))));
  }
  return doc;
}

KvDocument KvDocument::load(const std::string& path) { return parse(read_text_file(path)); }

std::string KvDocument::to_string() const {
  std::string out;
  for (const auto& l : lines_) {
    if (l.key.empty()) {
      out += "# " + l.value + "\n";
    } else {
      out += l.key + " = " + l.value + "\n";
    }
  }
  return out;
}

void KvDocument::save(const std::string& path) const { write_text_file(path, to_string()); }

void KvDocument::set(const std::string& key, std::string value) {
  if (auto it = index_.find(key); it != index_.end()) {
    lines_[it->second].value = std::move(value);
    return;
  }
  index_.emplace(key, lines_.size());
  lines_.push_back({key, std::move(value)});
}

void KvDocument::set(const std::string& key, double value) { set(key, format_real(value)); }
void KvDocument::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
void KvDocument::set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
void KvDocument::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

void KvDocument::set(const std::string& key, const Vec3& v) {
  set(key, format_real(v.x()) + " " + format_real(v.y()) + " " + format_real(v.z()));
}

void KvDocument::set(const std::string& key, const Vec2& v) {
  set(key, format_real(v.x()) + " " + format_real(v.y()));
}

void KvDocument::set(const std::string& key, const Quat& q) {
  set(key, format_real(q.w()) + " " + format_real(q.x()) + " " + format_real(q.y()) + " " +
               format_real(q.z()));
}

void KvDocument::comment(const std::string& text) { lines_.push_back({"", text}); }

bool KvDocument::has(const std::string& key) const { return index_.count(key) != 0; }

const std::string& KvDocument::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw ParseError("missing key '" + key + "'");
  return lines_[it->second].value;
}

std::string KvDocument::get(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double KvDocument::get_double(const std::string& key) const { return parse_real(get(key), key); }

double KvDocument::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t KvDocument::get_int(const std::string& key) const {
  const std::string& s = get(key);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw ParseError("key '" + key + "': not an integer: '" + s + "'");
  }
  return v;
}

std::int64_t KvDocument::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t KvDocument::get_uint(const std::string& key) const {
  const std::string& s = get(key);
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE || s.front() == '-') {
    throw ParseError("key '" + key + "': not an unsigned integer: '" + s + "'");
  }
  return v;
}

bool KvDocument::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ParseError("key '" + key + "': not a boolean: '" + s + "'");
}

std::vector<double> KvDocument::get_reals(const std::string& key) const {
  std::istringstream ss(get(key));
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(parse_real(tok, key));
  return out;
}

Vec3 KvDocument::get_vec3(const std::string& key) const {
  const auto r = get_reals(key);
  if (r.size() != 3) throw ParseError("key '" + key + "': expected 3 numbers");
  return {r[0], r[1], r[2]};
}

Vec2 KvDocument::get_vec2(const std::string& key) const {
  const auto r = get_reals(key);
  if (r.size() != 2) throw ParseError("key '" + key + "': expected 2 numbers");
  return {r[0], r[1]};
}

Quat KvDocument::get_quat(const std::string& key) const {
  const auto r = get_reals(key);
  if (r.size() != 4) throw ParseError("key '" + key + "': expected 4 numbers (w x y z)");
  return Quat(r[0], r[1], r[2], r[3]);
}

std::vector<std::string> KvDocument::keys() const {
  std::vector<std::string> out;
  for (const auto& l : lines_) {
    if (!l.key.empty()) out.push_back(l.key);
  }
  return out;
}

}  // namespace harvest
