#include "harvest/perception.hpp"

#include "harvest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace harvest {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned char> rank_;
};

}  // namespace

Hsv rgb_to_hsv(const Rgb& c) {
  const double mx = std::max({c.r, c.g, c.b});
  const double mn = std::min({c.r, c.g, c.b});
  const double delta = mx - mn;
  Hsv out;
  out.value = mx;
  out.saturation = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) return out;
  double h;
  if (mx == c.r) {
    h = 60.0 * std::fmod((c.g - c.b) / delta, 6.0);
  } else if (mx == c.g) {
    h = 60.0 * ((c.b - c.r) / delta + 2.0);
  } else {
    h = 60.0 * ((c.r - c.g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.hue = h;
  return out;
}

bool HueInterval::contains(double hue) const {
  if (lo <= hi) return hue >= lo && hue <= hi;
  return hue >= lo || hue <= hi;
}

void ColorModel::validate() const {
  if (hue_intervals.empty()) throw ConfigError("colour model needs at least one hue interval");
  for (const auto& iv : hue_intervals) {
    if (iv.lo < 0.0 || iv.lo > 360.0 || iv.hi < 0.0 || iv.hi > 360.0) {
      throw ConfigError("hue bounds must lie in [0, 360]");
    }
  }
  if (min_saturation < 0.0 || min_saturation > 1.0 || min_value < 0.0 || min_value > 1.0) {
    throw ConfigError("saturation/value thresholds must lie in [0, 1]");
  }
}

bool ColorModel::accepts(const Rgb& c) const {
  const Hsv hsv = rgb_to_hsv(c);
  if (hsv.saturation < min_saturation || hsv.value < min_value) return false;
  return std::any_of(hue_intervals.begin(), hue_intervals.end(),
                     [&](const HueInterval& iv) { return iv.contains(hsv.hue); });
}

ColorModel ColorModel::ripe_red() { return {{{350.0, 360.0}, {0.0, 15.0}}, 0.4, 0.2}; }

std::vector<std::size_t> detect_color(const ColoredPointCloud& cloud, const ColorModel& model) {
  cloud.validate();
  model.validate();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (model.accepts(cloud.colors[i])) out.push_back(i);
  }
  return out;
}

std::vector<PepperDetection> segment_clusters(const ColoredPointCloud& cloud,
                                              const std::vector<std::size_t>& indices,
                                              double radius, std::size_t min_points) {
  if (!(radius > 0.0)) throw ArgumentError("cluster radius must be positive");
  if (min_points < 1) throw ArgumentError("min_points must be >= 1");
  if (indices.empty()) return {};
  for (std::size_t idx : indices) {
    if (idx >= cloud.size()) throw ArgumentError("point index out of range");
  }

  std::vector<std::size_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  const PointGrid grid(cloud.positions, sorted, radius);
  DisjointSets sets(sorted.size());
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    grid.for_each_within(cloud.positions[sorted[a]], radius, [&](std::size_t b) {
      if (b > a) sets.unite(a, b);
    });
  }

  std::vector<std::vector<std::size_t>> groups;
  std::vector<long> group_of_root(sorted.size(), -1);
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    const std::size_t root = sets.find(a);
    if (group_of_root[root] < 0) {
      group_of_root[root] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(group_of_root[root])].push_back(sorted[a]);
  }

  std::vector<PepperDetection> out;
  for (auto& g : groups) {
    if (g.size() < min_points) continue;
    PepperDetection d;
    d.bbox = Aabb::empty();
    for (std::size_t idx : g) {
      d.centroid += cloud.positions[idx];
      d.bbox.expand(cloud.positions[idx]);
    }
    d.centroid /= static_cast<double>(g.size());
    d.point_count = g.size();
    d.point_indices = std::move(g);
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(), [](const PepperDetection& a, const PepperDetection& b) {
    if (a.point_count != b.point_count) return a.point_count > b.point_count;
    return a.centroid.x() < b.centroid.x();
  });
  return out;
}

KvDocument detections_to_kv(const std::vector<PepperDetection>& detections) {
  KvDocument doc;
  doc.set("detection.count", static_cast<std::int64_t>(detections.size()));
  for (std::size_t k = 0; k < detections.size(); ++k) {
    const auto& d = detections[k];
    const std::string p = "detection." + std::to_string(k) + ".";
    doc.set(p + "id", static_cast<std::int64_t>(k));
    doc.set(p + "count", static_cast<std::int64_t>(d.point_count));
    doc.set(p + "centroid", d.centroid);
    doc.set(p + "bbox_min", d.bbox.min);
    doc.set(p + "bbox_max", d.bbox.max);
  }
  return doc;
}

}  // namespace harvest
