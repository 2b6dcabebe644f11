#include "harvest/scene.hpp"

#include "harvest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace harvest {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double sample_positive(const NormalDist& d, RngStream& rng) {
  if (d.stddev <= 0.0) return d.mean;
  std::normal_distribution<double> n(d.mean, d.stddev);
  return std::max(n(rng), 0.2 * d.mean);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid scene config: " + what);
}

}  // namespace

std::string to_string(Cultivar c) {
  switch (c) {
    case Cultivar::Claire:
      return "claire";
    case Cultivar::Redject:
      return "redject";
    case Cultivar::Custom:
      return "custom";
  }
  return "custom";
}

Cultivar cultivar_from_string(const std::string& s) {
  if (s == "claire" || s == "Claire") return Cultivar::Claire;
  if (s == "redject" || s == "Redject") return Cultivar::Redject;
  if (s == "custom" || s == "Custom") return Cultivar::Custom;
  throw ConfigError("unknown cultivar '" + s + "'");
}

void SceneConfig::validate() const {
  require(row_length > 0.0, "row_length must be positive");
  require(std::abs(trellis_normal.norm() - 1.0) <= 1e-9, "trellis normal must be unit length");
  require(std::abs(trellis_normal.dot(kWorldUp)) <= 1e-9,
          "trellis normal must be horizontal (trellis-up is world +z)");
  require(pepper_count >= 0, "pepper_count must be non-negative");
  require((semi_axes_mean.array() > 0.0).all(), "semi-axis means must be positive");
  require((semi_axes_stddev.array() >= 0.0).all(), "semi-axis stddevs must be non-negative");
  for (const auto* d : {&peduncle_length, &peduncle_diameter, &peduncle_toughness, &ripeness}) {
    require(d->mean > 0.0, "distribution means must be positive");
    require(d->stddev >= 0.0, "distribution stddevs must be non-negative");
  }
  require(peduncle_toughness.mean <= 1.0 && ripeness.mean <= 1.0,
          "toughness and ripeness means must lie in [0,1]");
  require(peduncle_tilt_stddev >= 0.0, "peduncle tilt stddev must be non-negative");
  require(leaf_density >= 0.0, "leaf_density must be non-negative");
  require((leaf_radii_mean.array() > 0.0).all(), "leaf radius means must be positive");
  require((leaf_radii_stddev.array() >= 0.0).all(), "leaf radius stddevs must be non-negative");
  require(leaf_spread >= 0.0 && leaf_tilt_stddev >= 0.0, "leaf spreads must be non-negative");
  require(leaf_front_gap.x() <= leaf_front_gap.y(), "leaf_front_gap must be ordered");
  require(standoff_band.x() >= 0.0 && standoff_band.x() <= standoff_band.y(),
          "standoff_band must be ordered and non-negative");
  require(height_band.x() <= height_band.y(), "height_band must be ordered");
}

Vec3 SceneConfig::row_direction() const { return trellis_normal.cross(kWorldUp).normalized(); }

SceneConfig SceneConfig::preset(Cultivar c) {
  SceneConfig cfg;
  cfg.cultivar = c;
  switch (c) {
    case Cultivar::Claire:
      cfg.semi_axes_mean = {0.040, 0.038, 0.048};
      cfg.semi_axes_stddev = {0.004, 0.004, 0.005};
      cfg.peduncle_length = {0.050, 0.008};
      cfg.peduncle_diameter = {0.0065, 0.0015};
      cfg.peduncle_toughness = {0.40, 0.15};
      break;
    case Cultivar::Redject:
      cfg.semi_axes_mean = {0.046, 0.040, 0.065};
      cfg.semi_axes_stddev = {0.004, 0.004, 0.005};
      cfg.peduncle_length = {0.045, 0.008};
      cfg.peduncle_diameter = {0.0090, 0.0020};
      cfg.peduncle_toughness = {0.60, 0.15};
      break;
    case Cultivar::Custom:
      break;
  }
  return cfg;
}

Vec3 Peduncle::point_at_height(double h) const {
  const double rise = std::max(axis.dot(kWorldUp), 1e-9);
  const double s = std::clamp(h / rise, 0.0, length);
  return attach_point + s * axis;
}

const SweetPepper& Scene::pepper(int id) const {
  for (const auto& p : peppers) {
    if (p.id == id) return p;
  }
  throw LookupError("no pepper with id " + std::to_string(id));
}

Aabb Scene::bounds() const {
  Aabb box = Aabb::empty();
  for (const auto& p : peppers) {
    box.expand(p.centroid - p.semi_axes);
    box.expand(p.centroid + p.semi_axes);
    box.expand(p.peduncle.tip());
  }
  for (const auto& l : leaves) {
    const double r = l.radii.maxCoeff();
    box.expand(l.center - Vec3::Constant(r));
    box.expand(l.center + Vec3::Constant(r));
  }
  if (box.is_empty()) box = Aabb::around(trellis.origin, Vec3::Zero());
  return box;
}

Rgb ripeness_color(double ripeness) {
  const double r = clamp01(ripeness);
  constexpr Rgb green{0.15, 0.55, 0.10};
  constexpr Rgb red{0.80, 0.05, 0.05};
  return {green.r + r * (red.r - green.r), green.g + r * (red.g - green.g),
          green.b + r * (red.b - green.b)};
}

double sample_lognormal(const NormalDist& d, RngStream& rng) {
  if (d.stddev <= 0.0) return d.mean;
  const double s2 = std::log1p((d.stddev * d.stddev) / (d.mean * d.mean));
  const double mu = std::log(d.mean) - 0.5 * s2;
  std::normal_distribution<double> n(mu, std::sqrt(s2));
  return std::exp(n(rng));
}

Scene generate_scene(const SceneConfig& config) {
  config.validate();
  RngStream rng(mix64(config.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Scene scene;
  scene.config = config;
  scene.trellis = {config.trellis_origin, config.trellis_normal, kTrellisColor};

  const Vec3 row = config.row_direction();
  const Vec3 normal = config.trellis_normal;
  const Vec3 up = kWorldUp;

  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  scene.peppers.reserve(static_cast<std::size_t>(config.pepper_count));
  for (int i = 0; i < config.pepper_count; ++i) {
    SweetPepper p;
    p.id = i;
    const double a_row = sample_positive({config.semi_axes_mean.x(), config.semi_axes_stddev.x()}, rng);
    const double a_depth = sample_positive({config.semi_axes_mean.y(), config.semi_axes_stddev.y()}, rng);
    const double a_up = sample_positive({config.semi_axes_mean.z(), config.semi_axes_stddev.z()}, rng);
    p.semi_axes = row.cwiseAbs() * a_row + normal.cwiseAbs() * a_depth + up * a_up;

    // Rejection-sample a placement that keeps fruit apart; after the retry
    // budget the last draw is kept so the count is always exact.
    const double reach = p.semi_axes.maxCoeff();
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double along = uniform(0.0, config.row_length);
      const double height = uniform(config.height_band.x(), config.height_band.y());
      const double standoff = uniform(config.standoff_band.x(), config.standoff_band.y());
      p.centroid = config.trellis_origin + along * row + height * up + standoff * normal;
      const bool clear = std::none_of(scene.peppers.begin(), scene.peppers.end(), [&](const SweetPepper& q) {
        return (q.centroid - p.centroid).norm() < reach + q.semi_axes.maxCoeff() + 0.01;
      });
      if (clear) break;
    }

    p.ripeness = clamp01(config.ripeness.stddev > 0.0
                             ? config.ripeness.mean + config.ripeness.stddev * gauss(rng)
                             : config.ripeness.mean);
    p.base_color = ripeness_color(p.ripeness);

    Peduncle& ped = p.peduncle;
    ped.attach_point = p.centroid + up * p.semi_axes.z();
    const double tilt = std::abs(config.peduncle_tilt_stddev * gauss(rng));
    const double azimuth = uniform(0.0, 2.0 * std::numbers::pi);
    ped.axis = (std::cos(tilt) * up +
                std::sin(tilt) * (std::cos(azimuth) * row + std::sin(azimuth) * normal))
                   .normalized();
    ped.length = std::max(sample_positive(config.peduncle_length, rng), 0.005);
    const double max_diameter = 1.8 * p.semi_axes.minCoeff();
    ped.diameter = std::min(sample_lognormal(config.peduncle_diameter, rng), max_diameter);
    ped.toughness = clamp01(config.peduncle_toughness.stddev > 0.0
                                ? config.peduncle_toughness.mean +
                                      config.peduncle_toughness.stddev * gauss(rng)
                                : config.peduncle_toughness.mean);
    scene.peppers.push_back(p);
  }

  const auto leaf_count = static_cast<int>(std::lround(config.leaf_density * config.pepper_count));
  scene.leaves.reserve(static_cast<std::size_t>(leaf_count));
  for (int j = 0; j < leaf_count; ++j) {
    const SweetPepper& owner = scene.peppers[static_cast<std::size_t>(j % config.pepper_count)];
    const double depth_extent = owner.semi_axes.dot(normal.cwiseAbs());
    Leaf leaf;
    leaf.center = owner.centroid + config.leaf_spread * gauss(rng) * row +
                  config.leaf_spread * gauss(rng) * up +
                  (depth_extent + uniform(config.leaf_front_gap.x(), config.leaf_front_gap.y())) *
                      normal;
    const double tilt = config.leaf_tilt_stddev * gauss(rng);
    const double azimuth = uniform(0.0, 2.0 * std::numbers::pi);
    leaf.normal = (std::cos(tilt) * normal +
                   std::sin(tilt) * (std::cos(azimuth) * row + std::sin(azimuth) * up))
                      .normalized();
    leaf.radii = {sample_positive({config.leaf_radii_mean.x(), config.leaf_radii_stddev.x()}, rng),
                  sample_positive({config.leaf_radii_mean.y(), config.leaf_radii_stddev.y()}, rng)};
    leaf.color = kLeafColor;
    scene.leaves.push_back(leaf);
  }
  return scene;
}

void SensorModel::validate() const {
  if (horizontal_rays < 1 || vertical_rays < 1) throw ConfigError("sensor ray counts must be >= 1");
  if (!(field_of_view > 0.0 && field_of_view < std::numbers::pi)) {
    throw ConfigError("sensor field of view must lie in (0, pi)");
  }
  if (depth_noise_base < 0.0 || depth_noise_quadratic < 0.0 || color_noise_stddev < 0.0) {
    throw ConfigError("sensor noise parameters must be non-negative");
  }
  if (!(min_range > 0.0 && min_range < max_range)) {
    throw ConfigError("sensor range must satisfy 0 < min < max");
  }
}

double SensorModel::vertical_field_of_view() const {
  const double half = std::tan(0.5 * field_of_view) * vertical_rays / horizontal_rays;
  return 2.0 * std::atan(half);
}

Vec3 SensorModel::ray_direction(int col, int row) const {
  const double th = std::tan(0.5 * field_of_view);
  const double tv = th * vertical_rays / horizontal_rays;
  const double u = (2.0 * (col + 0.5) / horizontal_rays - 1.0) * th;
  const double v = (2.0 * (row + 0.5) / vertical_rays - 1.0) * tv;
  return Vec3(u, v, 1.0).normalized();
}

SensorModel SensorModel::noiseless() {
  SensorModel s;
  s.depth_noise_base = 0.0;
  s.depth_noise_quadratic = 0.0;
  s.color_noise_stddev = 0.0;
  return s;
}

void ColoredPointCloud::append(const ColoredPointCloud& other) {
  if (!empty() && has_normals() != other.has_normals() && !other.empty()) {
    throw ArgumentError("cannot append clouds with and without normals");
  }
  const bool keep_normals = empty() ? other.has_normals() : has_normals();
  positions.insert(positions.end(), other.positions.begin(), other.positions.end());
  colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  if (keep_normals) normals.insert(normals.end(), other.normals.begin(), other.normals.end());
}

void ColoredPointCloud::validate() const {
  if (colors.size() != positions.size()) throw ArgumentError("colour array length mismatch");
  if (!normals.empty() && normals.size() != positions.size()) {
    throw ArgumentError("normal array length mismatch");
  }
  for (const auto& n : normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6) throw ArgumentError("normals must be unit length");
  }
}

std::optional<SurfaceHit> cast_ray(const Scene& scene, const Ray& ray, double t_min, double t_max) {
  std::optional<SurfaceHit> best;
  double best_t = t_max;
  if (auto t = intersect_plane(ray, scene.trellis.origin, scene.trellis.normal, t_min);
      t && *t <= best_t) {
    best_t = *t;
    best = SurfaceHit{*t, scene.trellis.normal, scene.trellis.color, SurfaceKind::Trellis, -1};
  }
  for (const auto& p : scene.peppers) {
    const Ellipsoid body = p.body();
    if (auto t = intersect(ray, body, t_min); t && *t <= best_t) {
      best_t = *t;
      best = SurfaceHit{*t, body.normal_at(ray.at(*t)), p.base_color, SurfaceKind::Pepper, p.id};
    }
  }
  for (std::size_t i = 0; i < scene.leaves.size(); ++i) {
    const Leaf& l = scene.leaves[i];
    if (auto t = intersect(ray, l.disc(), t_min); t && *t <= best_t) {
      best_t = *t;
      best = SurfaceHit{*t, l.normal, l.color, SurfaceKind::Leaf, static_cast<int>(i)};
    }
  }
  if (best && best->normal.dot(ray.direction) > 0.0) best->normal = -best->normal;
  return best;
}

ColoredPointCloud render_pointcloud(const Scene& scene, const Pose& camera_pose,
                                    const SensorModel& sensor, std::uint64_t noise_seed) {
  sensor.validate();
  RngStream rng(mix64(noise_seed ^ 0x72656e646572ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool depth_noise = sensor.depth_noise_base > 0.0 || sensor.depth_noise_quadratic > 0.0;
  const bool color_noise = sensor.color_noise_stddev > 0.0;

  ColoredPointCloud cloud;
  cloud.positions.reserve(static_cast<std::size_t>(sensor.ray_count()));
  cloud.colors.reserve(static_cast<std::size_t>(sensor.ray_count()));
  cloud.normals.reserve(static_cast<std::size_t>(sensor.ray_count()));

  const Eigen::Matrix3d rot = camera_pose.orientation.toRotationMatrix();
  for (int row = 0; row < sensor.vertical_rays; ++row) {
    for (int col = 0; col < sensor.horizontal_rays; ++col) {
      const Ray ray{camera_pose.position, rot * sensor.ray_direction(col, row)};
      const auto hit = cast_ray(scene, ray, 0.0, sensor.max_range);
      if (!hit || hit->t < sensor.min_range) continue;
      double t = hit->t;
      if (depth_noise) {
        t += (sensor.depth_noise_base + sensor.depth_noise_quadratic * t * t) * gauss(rng);
      }
      Rgb c = hit->color;
      if (color_noise) {
        c.r = clamp01(c.r + sensor.color_noise_stddev * gauss(rng));
        c.g = clamp01(c.g + sensor.color_noise_stddev * gauss(rng));
        c.b = clamp01(c.b + sensor.color_noise_stddev * gauss(rng));
      }
      cloud.positions.push_back(ray.at(t));
      cloud.colors.push_back(c);
      cloud.normals.push_back(hit->normal);
    }
  }
  return cloud;
}

double occlusion_fraction(const Scene& scene, int pepper_id, const Pose& camera_pose, int samples) {
  const SweetPepper& target = scene.pepper(pepper_id);
  if (samples < 1) throw ArgumentError("occlusion sample count must be >= 1");
  const Ellipsoid body = target.body();
  const Vec3 eye = camera_pose.position;
  const Vec3 view = (target.centroid - eye).normalized();
  const Pose frame = pose_from_forward(target.centroid, view);
  const Vec3 u = frame.x_axis();
  const Vec3 v = frame.y_axis();
  const double radius = target.semi_axes.maxCoeff() * 1.02;

  long hits = 0;
  long blocked = 0;
  for (int j = 0; j < samples; ++j) {
    for (int i = 0; i < samples; ++i) {
      const double a = radius * (2.0 * (i + 0.5) / samples - 1.0);
      const double b = radius * (2.0 * (j + 0.5) / samples - 1.0);
      const Vec3 aim = target.centroid + a * u + b * v;
      const Ray ray{eye, (aim - eye).normalized()};
      const auto t_body = intersect(ray, body, 0.0);
      if (!t_body) continue;
      ++hits;
      bool occluded = false;
      for (const auto& l : scene.leaves) {
        if (auto t = intersect(ray, l.disc(), 0.0); t && *t < *t_body) {
          occluded = true;
          break;
        }
      }
      if (!occluded) {
        for (const auto& p : scene.peppers) {
          if (p.id == pepper_id) continue;
          if (auto t = intersect(ray, p.body(), 0.0); t && *t < *t_body) {
            occluded = true;
            break;
          }
        }
      }
      if (occluded) ++blocked;
    }
  }
  if (hits == 0) return 1.0;
  return static_cast<double>(blocked) / static_cast<double>(hits);
}

}  // namespace harvest
