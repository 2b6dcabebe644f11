#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace harvest {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Quat = Eigen::Quaterniond;

inline const Vec3 kWorldUp = Vec3::UnitZ();

/// Rigid pose. For cameras and tools the local +z axis is the optical /
/// approach axis, +x points right, +y points down.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Eigen::Isometry3d transform() const;
  static Pose from_transform(const Eigen::Isometry3d& t);

  Vec3 x_axis() const { return orientation * Vec3::UnitX(); }
  Vec3 y_axis() const { return orientation * Vec3::UnitY(); }
  Vec3 z_axis() const { return orientation * Vec3::UnitZ(); }

  Vec3 to_world(const Vec3& local) const { return position + orientation * local; }

  /// True when the quaternion norm is 1 within 1e-9.
  bool is_normalized() const;
};

/// Pose at `eye` whose +z axis points at `target` and whose +x axis is
/// horizontal (perpendicular to `up`).
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = kWorldUp);

/// Pose at `position` with +z along `forward` and +x horizontal.
Pose pose_from_forward(const Vec3& position, const Vec3& forward, const Vec3& up = kWorldUp);

/// Angle between two orientations (radians, in [0, pi]).
double orientation_distance(const Quat& a, const Quat& b);

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  static Aabb empty();
  static Aabb around(const Vec3& center, const Vec3& half_extent);

  void expand(const Vec3& p);
  bool is_empty() const;
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double volume() const;
  double half_diagonal() const { return 0.5 * extent().norm(); }
  bool contains(const Vec3& p, double slack = 0.0) const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  Vec3 at(double t) const { return origin + t * direction; }
};

/// Axis-aligned ellipsoid.
struct Ellipsoid {
  Vec3 center;
  Vec3 semi_axes;

  bool contains(const Vec3& p) const;
  /// Outward unit normal of the level surface through `p`.
  Vec3 normal_at(const Vec3& p) const;
  /// Closest surface point to an exterior point. Interior points are
  /// projected radially.
  Vec3 closest_point(const Vec3& p) const;
  /// Euclidean distance to the solid ellipsoid (0 inside).
  double distance(const Vec3& p) const;
};

/// Flat elliptical disc with in-plane axes derived from its normal.
struct Disc {
  Vec3 center;
  Vec3 normal;  // unit length
  Vec2 radii;

  /// In-plane unit axes (major, minor). The major axis is horizontal unless
  /// the disc itself is horizontal.
  std::pair<Vec3, Vec3> axes() const;
  double distance(const Vec3& p) const;
};

/// Smallest ray parameter t > t_min hitting the surface, if any.
std::optional<double> intersect(const Ray& ray, const Ellipsoid& e, double t_min = 0.0);
std::optional<double> intersect(const Ray& ray, const Disc& d, double t_min = 0.0);
std::optional<double> intersect_plane(const Ray& ray, const Vec3& point, const Vec3& normal,
                                      double t_min = 0.0);

/// Uniform-cell spatial hash for fixed-radius neighbour queries.
class PointGrid {
 public:
  PointGrid(std::span<const Vec3> points, std::span<const std::size_t> subset, double cell);

  /// Calls fn(local_index) for every subset entry within `radius` of p,
  /// where local_index indexes `subset`. radius must not exceed the cell size.
  template <typename Fn>
  void for_each_within(const Vec3& p, double radius, Fn&& fn) const {
    const auto c = cell_of(p);
    const double r2 = radius * radius;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find(key(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == cells_.end()) continue;
          for (std::size_t local : it->second) {
            if ((points_[subset_[local]] - p).squaredNorm() <= r2) fn(local);
          }
        }
      }
    }
  }

 private:
  std::array<std::int64_t, 3> cell_of(const Vec3& p) const;
  static std::uint64_t key(std::int64_t x, std::int64_t y, std::int64_t z);

  std::span<const Vec3> points_;
  std::span<const std::size_t> subset_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace harvest
