#pragma once

#include "harvest/geometry.hpp"
#include "harvest/kv_text.hpp"
#include "harvest/scene.hpp"

#include <cstddef>
#include <vector>

namespace harvest {

struct Hsv {
  double hue = 0.0;  // degrees in [0, 360)
  double saturation = 0.0;
  double value = 0.0;
};

Hsv rgb_to_hsv(const Rgb& c);

/// Closed hue interval in degrees. lo > hi wraps through 0.
struct HueInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double hue) const;
};

struct ColorModel {
  std::vector<HueInterval> hue_intervals;
  double min_saturation = 0.0;
  double min_value = 0.0;

  void validate() const;
  bool accepts(const Rgb& c) const;

  /// Ripe red: hue in [350,360] or [0,15], s >= 0.4, v >= 0.2.
  static ColorModel ripe_red();
};

struct PepperDetection {
  std::vector<std::size_t> point_indices;  // ascending
  Vec3 centroid = Vec3::Zero();
  Aabb bbox;
  std::size_t point_count = 0;
};

struct SegmentationParams {
  double radius = 0.02;
  std::size_t min_points = 30;
};

/// Indices (ascending) of points whose colour passes every threshold.
std::vector<std::size_t> detect_color(const ColoredPointCloud& cloud, const ColorModel& model);

/// Single-linkage Euclidean clustering of the selected points: two points
/// are linked iff within `radius`. Clusters with fewer than `min_points`
/// are dropped. Sorted by descending size, then ascending centroid x.
std::vector<PepperDetection> segment_clusters(const ColoredPointCloud& cloud,
                                              const std::vector<std::size_t>& indices,
                                              double radius, std::size_t min_points);

/// Structured-text form: detection.count, then detection.<k>.count /
/// centroid / bbox_min / bbox_max.
KvDocument detections_to_kv(const std::vector<PepperDetection>& detections);

}  // namespace harvest
