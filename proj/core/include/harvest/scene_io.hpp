#pragma once

#include "harvest/kv_text.hpp"
#include "harvest/scene.hpp"

#include <string>
#include <string_view>

namespace harvest {

// Scene files use the KvDocument format with these keys:
//
//   format                       = harvest-scene/1
//   config.*                     SceneConfig fields (see scene_config_to_kv)
//   trellis.origin / .normal     3-vectors
//   pepper.count, leaf.count     integers
//   pepper.<i>.id / centroid / semi_axes / ripeness / color
//   pepper.<i>.peduncle.attach / axis / length / diameter / toughness
//   leaf.<j>.center / normal / radii / color

void scene_config_to_kv(const SceneConfig& config, KvDocument& doc, const std::string& prefix);
/// Reads keys under `prefix`, starting from the cultivar preset named by
/// `<prefix>cultivar` (or `base`) and overriding whatever is present.
SceneConfig scene_config_from_kv(const KvDocument& doc, const std::string& prefix,
                                 const SceneConfig& base = SceneConfig{});

std::string write_scene(const Scene& scene);
Scene read_scene(std::string_view text);

/// ASCII PLY: standard header, then one `x y z r g b` line per point with
/// six decimals; colours are floats in [0,1]. Normals are not stored.
std::string write_ply(const ColoredPointCloud& cloud);
ColoredPointCloud read_ply(std::string_view text);

}  // namespace harvest
