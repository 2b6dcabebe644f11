#pragma once

#include "harvest/geometry.hpp"
#include "harvest/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace harvest {

enum class Cultivar { Claire, Redject, Custom };

std::string to_string(Cultivar c);
Cultivar cultivar_from_string(const std::string& s);

struct NormalDist {
  double mean = 0.0;
  double stddev = 0.0;

  friend bool operator==(const NormalDist&, const NormalDist&) = default;
};

/// Parameters of a synthetic protected-cropping row.
///
/// Pepper sizes are given in the trellis frame: x along the row, y along the
/// trellis normal (depth), z along trellis-up (world +z). Peduncle diameters
/// are log-normal with the stated mean/stddev; every other size is a normal
/// clamped to stay positive.
struct SceneConfig {
  double row_length = 2.0;
  Vec3 trellis_origin = Vec3::Zero();
  Vec3 trellis_normal = Vec3::UnitY();
  int pepper_count = 10;

  Vec3 semi_axes_mean{0.040, 0.035, 0.050};
  Vec3 semi_axes_stddev{0.004, 0.004, 0.005};
  NormalDist peduncle_length{0.050, 0.008};
  NormalDist peduncle_diameter{0.006, 0.0015};
  NormalDist peduncle_toughness{0.40, 0.15};
  double peduncle_tilt_stddev = 0.05;  // radians
  NormalDist ripeness{0.90, 0.05};

  double leaf_density = 0.0;  // leaves per pepper
  Vec2 leaf_radii_mean{0.050, 0.030};
  Vec2 leaf_radii_stddev{0.008, 0.005};
  double leaf_spread = 0.045;          // lateral stddev about the owning pepper
  Vec2 leaf_front_gap{0.005, 0.060};   // uniform gap in front of the fruit
  double leaf_tilt_stddev = 0.35;      // radians

  Vec2 standoff_band{0.06, 0.14};  // centroid distance from the trellis plane
  Vec2 height_band{0.50, 1.00};    // centroid height along trellis-up

  std::uint64_t seed = 0;
  Cultivar cultivar = Cultivar::Custom;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  static SceneConfig preset(Cultivar c);

  Vec3 row_direction() const;
};

struct Peduncle {
  Vec3 attach_point;
  Vec3 axis;  // unit, pointing away from the fruit
  double length = 0.0;
  double diameter = 0.0;
  double toughness = 0.0;

  /// Point on the peduncle axis at height `h` above the attach point,
  /// clamped to the peduncle's extent.
  Vec3 point_at_height(double h) const;
  Vec3 tip() const { return attach_point + length * axis; }
};

struct SweetPepper {
  int id = 0;
  Vec3 centroid;
  Vec3 semi_axes;
  double ripeness = 0.0;
  Rgb base_color;
  Peduncle peduncle;

  Ellipsoid body() const { return {centroid, semi_axes}; }
};

struct Leaf {
  Vec3 center;
  Vec3 normal;
  Vec2 radii;
  Rgb color;

  Disc disc() const { return {center, normal, radii}; }
};

struct Trellis {
  Vec3 origin;
  Vec3 normal;
  Rgb color;
};

struct Scene {
  SceneConfig config;
  std::vector<SweetPepper> peppers;
  std::vector<Leaf> leaves;
  Trellis trellis;

  /// Throws LookupError for an unknown id.
  const SweetPepper& pepper(int id) const;
  Aabb bounds() const;
};

Rgb ripeness_color(double ripeness);
inline const Rgb kLeafColor{0.20, 0.50, 0.15};
inline const Rgb kTrellisColor{0.55, 0.50, 0.45};

/// Samples a peduncle diameter (m) from the log-normal with the given mean/stddev.
double sample_lognormal(const NormalDist& d, std::mt19937_64& rng);

Scene generate_scene(const SceneConfig& config);

struct SensorModel {
  int horizontal_rays = 80;
  int vertical_rays = 60;
  double field_of_view = 1.0471975511965976;  // horizontal, radians
  double depth_noise_base = 0.0005;            // sigma0
  double depth_noise_quadratic = 0.002;        // sigma1, per m^2
  double color_noise_stddev = 0.02;
  double min_range = 0.10;
  double max_range = 2.00;

  void validate() const;
  /// Vertical field of view implied by square pixels.
  double vertical_field_of_view() const;
  /// Unit ray direction in the camera frame for pixel (col, row).
  Vec3 ray_direction(int col, int row) const;
  int ray_count() const { return horizontal_rays * vertical_rays; }

  static SensorModel noiseless();
};

struct ColoredPointCloud {
  std::vector<Vec3> positions;
  std::vector<Rgb> colors;
  std::vector<Vec3> normals;  // empty or parallel to positions

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool has_normals() const { return !normals.empty(); }
  void append(const ColoredPointCloud& other);
  /// Throws ArgumentError when the parallel arrays disagree.
  void validate() const;
};

enum class SurfaceKind { Trellis, Pepper, Leaf };

struct SurfaceHit {
  double t = 0.0;
  Vec3 normal;  // faces the ray origin
  Rgb color;
  SurfaceKind kind = SurfaceKind::Trellis;
  int index = -1;  // pepper id or leaf index
};

/// Nearest surface along the ray within (t_min, t_max].
std::optional<SurfaceHit> cast_ray(const Scene& scene, const Ray& ray, double t_min,
                                   double t_max);

ColoredPointCloud render_pointcloud(const Scene& scene, const Pose& camera_pose,
                                    const SensorModel& sensor, std::uint64_t noise_seed = 0);

/// Fraction of sample rays toward the pepper blocked by leaves or other
/// peppers. Rays are aimed at a samples x samples grid spanning the
/// pepper's bounding sphere; only rays that hit the pepper count.
double occlusion_fraction(const Scene& scene, int pepper_id, const Pose& camera_pose,
                          int samples = 64);

}  // namespace harvest
