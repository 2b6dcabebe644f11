#include "harvest/scene_io.hpp"

#include "harvest/errors.hpp"

#include <cstdio>
#include <sstream>

namespace harvest {

namespace {

constexpr const char* kSceneFormat = "harvest-scene/1";

Vec3 rgb_vec(const Rgb& c) { return {c.r, c.g, c.b}; }
Rgb vec_rgb(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

void put_dist(KvDocument& doc, const std::string& key, const NormalDist& d) {
  doc.set(key, Vec2(d.mean, d.stddev));
}

NormalDist get_dist(const KvDocument& doc, const std::string& key, const NormalDist& fallback) {
  if (!doc.has(key)) return fallback;
  const Vec2 v = doc.get_vec2(key);
  return {v.x(), v.y()};
}

}  // namespace

void scene_config_to_kv(const SceneConfig& c, KvDocument& doc, const std::string& p) {
  doc.set(p + "cultivar", to_string(c.cultivar));
  doc.set(p + "seed", c.seed);
  doc.set(p + "pepper_count", c.pepper_count);
  doc.set(p + "row_length", c.row_length);
  doc.set(p + "trellis_origin", c.trellis_origin);
  doc.set(p + "trellis_normal", c.trellis_normal);
  doc.set(p + "semi_axes_mean", c.semi_axes_mean);
  doc.set(p + "semi_axes_stddev", c.semi_axes_stddev);
  put_dist(doc, p + "peduncle_length", c.peduncle_length);
  put_dist(doc, p + "peduncle_diameter", c.peduncle_diameter);
  put_dist(doc, p + "peduncle_toughness", c.peduncle_toughness);
  doc.set(p + "peduncle_tilt_stddev", c.peduncle_tilt_stddev);
  put_dist(doc, p + "ripeness", c.ripeness);
  doc.set(p + "leaf_density", c.leaf_density);
  doc.set(p + "leaf_radii_mean", c.leaf_radii_mean);
  doc.set(p + "leaf_radii_stddev", c.leaf_radii_stddev);
  doc.set(p + "leaf_spread", c.leaf_spread);
  doc.set(p + "leaf_front_gap", c.leaf_front_gap);
  doc.set(p + "leaf_tilt_stddev", c.leaf_tilt_stddev);
  doc.set(p + "standoff_band", c.standoff_band);
  doc.set(p + "height_band", c.height_band);
}

SceneConfig scene_config_from_kv(const KvDocument& doc, const std::string& p,
                                 const SceneConfig& base) {
  SceneConfig c = doc.has(p + "cultivar")
                      ? SceneConfig::preset(cultivar_from_string(doc.get(p + "cultivar")))
                      : base;
  if (doc.has(p + "seed")) c.seed = doc.get_uint(p + "seed");
  if (doc.has(p + "pepper_count")) c.pepper_count = static_cast<int>(doc.get_int(p + "pepper_count"));
  c.row_length = doc.get_double(p + "row_length", c.row_length);
  if (doc.has(p + "trellis_origin")) c.trellis_origin = doc.get_vec3(p + "trellis_origin");
  if (doc.has(p + "trellis_normal")) c.trellis_normal = doc.get_vec3(p + "trellis_normal");
  if (doc.has(p + "semi_axes_mean")) c.semi_axes_mean = doc.get_vec3(p + "semi_axes_mean");
  if (doc.has(p + "semi_axes_stddev")) c.semi_axes_stddev = doc.get_vec3(p + "semi_axes_stddev");
  c.peduncle_length = get_dist(doc, p + "peduncle_length", c.peduncle_length);
  c.peduncle_diameter = get_dist(doc, p + "peduncle_diameter", c.peduncle_diameter);
  c.peduncle_toughness = get_dist(doc, p + "peduncle_toughness", c.peduncle_toughness);
  c.peduncle_tilt_stddev = doc.get_double(p + "peduncle_tilt_stddev", c.peduncle_tilt_stddev);
  c.ripeness = get_dist(doc, p + "ripeness", c.ripeness);
  c.leaf_density = doc.get_double(p + "leaf_density", c.leaf_density);
  if (doc.has(p + "leaf_radii_mean")) c.leaf_radii_mean = doc.get_vec2(p + "leaf_radii_mean");
  if (doc.has(p + "leaf_radii_stddev")) c.leaf_radii_stddev = doc.get_vec2(p + "leaf_radii_stddev");
  c.leaf_spread = doc.get_double(p + "leaf_spread", c.leaf_spread);
  if (doc.has(p + "leaf_front_gap")) c.leaf_front_gap = doc.get_vec2(p + "leaf_front_gap");
  c.leaf_tilt_stddev = doc.get_double(p + "leaf_tilt_stddev", c.leaf_tilt_stddev);
  if (doc.has(p + "standoff_band")) c.standoff_band = doc.get_vec2(p + "standoff_band");
  if (doc.has(p + "height_band")) c.height_band = doc.get_vec2(p + "height_band");
  return c;
}

std::string write_scene(const Scene& scene) {
  KvDocument doc;
  doc.set("format", kSceneFormat);
  scene_config_to_kv(scene.config, doc, "config.");
  doc.set("trellis.origin", scene.trellis.origin);
  doc.set("trellis.normal", scene.trellis.normal);
  doc.set("trellis.color", rgb_vec(scene.trellis.color));
  doc.set("pepper.count", static_cast<std::int64_t>(scene.peppers.size()));
  for (std::size_t i = 0; i < scene.peppers.size(); ++i) {
    const SweetPepper& s = scene.peppers[i];
    const std::string k = "pepper." + std::to_string(i) + ".";
    doc.set(k + "id", s.id);
    doc.set(k + "centroid", s.centroid);
    doc.set(k + "semi_axes", s.semi_axes);
    doc.set(k + "ripeness", s.ripeness);
    doc.set(k + "color", rgb_vec(s.base_color));
    doc.set(k + "peduncle.attach", s.peduncle.attach_point);
    doc.set(k + "peduncle.axis", s.peduncle.axis);
    doc.set(k + "peduncle.length", s.peduncle.length);
    doc.set(k + "peduncle.diameter", s.peduncle.diameter);
    doc.set(k + "peduncle.toughness", s.peduncle.toughness);
  }
  doc.set("leaf.count", static_cast<std::int64_t>(scene.leaves.size()));
  for (std::size_t j = 0; j < scene.leaves.size(); ++j) {
    const Leaf& l = scene.leaves[j];
    const std::string k = "leaf." + std::to_string(j) + ".";
    doc.set(k + "center", l.center);
    doc.set(k + "normal", l.normal);
    doc.set(k + "radii", l.radii);
    doc.set(k + "color", rgb_vec(l.color));
  }
  return doc.to_string();
}

Scene read_scene(std::string_view text) {
  const KvDocument doc = KvDocument::parse(text);
  if (doc.get("format") != kSceneFormat) {
    throw ParseError("unsupported scene format '" + doc.get("format") + "'");
  }
  Scene scene;
  scene.config = scene_config_from_kv(doc, "config.");
  scene.trellis = {doc.get_vec3("trellis.origin"), doc.get_vec3("trellis.normal"),
                   vec_rgb(doc.get_vec3("trellis.color"))};
  const auto pepper_count = doc.get_int("pepper.count");
  if (pepper_count < 0) throw ParseError("negative pepper.count");
  for (std::int64_t i = 0; i < pepper_count; ++i) {
    const std::string k = "pepper." + std::to_string(i) + ".";
    SweetPepper s;
    s.id = static_cast<int>(doc.get_int(k + "id"));
    s.centroid = doc.get_vec3(k + "centroid");
    s.semi_axes = doc.get_vec3(k + "semi_axes");
    s.ripeness = doc.get_double(k + "ripeness");
    s.base_color = vec_rgb(doc.get_vec3(k + "color"));
    s.peduncle.attach_point = doc.get_vec3(k + "peduncle.attach");
    s.peduncle.axis = doc.get_vec3(k + "peduncle.axis");
    s.peduncle.length = doc.get_double(k + "peduncle.length");
    s.peduncle.diameter = doc.get_double(k + "peduncle.diameter");
    s.peduncle.toughness = doc.get_double(k + "peduncle.toughness");
    scene.peppers.push_back(s);
  }
  const auto leaf_count = doc.get_int("leaf.count");
  if (leaf_count < 0) throw ParseError("negative leaf.count");
  for (std::int64_t j = 0; j < leaf_count; ++j) {
    const std::string k = "leaf." + std::to_string(j) + ".";
    scene.leaves.push_back({doc.get_vec3(k + "center"), doc.get_vec3(k + "normal"),
                            doc.get_vec2(k + "radii"), vec_rgb(doc.get_vec3(k + "color"))});
  }
  return scene;
}

std::string write_ply(const ColoredPointCloud& cloud) {
  cloud.validate();
  std::string out;
  out += "ply\nformat ascii 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* name : {"x", "y", "z", "r", "g", "b"}) {
    out += std::string("property float ") + name + "\n";
  }
  out += "end_header\n";
  char buf[160];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    const Rgb& c = cloud.colors[i];
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %.6f %.6f %.6f\n", p.x(), p.y(), p.z(), c.r,
                  c.g, c.b);
    out += buf;
  }
  return out;
}

ColoredPointCloud read_ply(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw ParseError("PLY: missing magic");
  std::size_t count = 0;
  bool have_count = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string kind;
      ls >> kind;
      if (kind != "ascii") throw ParseError("PLY: only ascii format is supported");
    } else if (word == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw ParseError("PLY: unexpected element '" + name + "'");
      have_count = true;
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (word != "comment" && !word.empty()) {
      throw ParseError("PLY: unexpected header line '" + line + "'");
    }
  }
  const std::vector<std::string> expected{"x", "y", "z", "r", "g", "b"};
  if (!have_count || props != expected) throw ParseError("PLY: expected x y z r g b vertex properties");

  ColoredPointCloud cloud;
  cloud.positions.reserve(count);
  cloud.colors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double v[6];
    for (double& x : v) {
      if (!(in >> x)) throw ParseError("PLY: truncated vertex data");
    }
    cloud.positions.emplace_back(v[0], v[1], v[2]);
    cloud.colors.push_back({v[3], v[4], v[5]});
  }
  return cloud;
}

}  // namespace harvest
