#include "harvest/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace harvest {

namespace {

// Closest point on the boundary of an axis-aligned N-dimensional ellipse
// centred at the origin, for a query y outside it. Works in the first
// orthant and restores signs afterwards; the root of
//   F(t) = sum_i (e_i y_i / (t + e_i^2))^2 - 1
// is bracketed in [0, e_max |y|] for exterior points.
template <int N>
Eigen::Matrix<double, N, 1> closest_on_ellipse(const Eigen::Matrix<double, N, 1>& y,
                                               const Eigen::Matrix<double, N, 1>& e) {
  const Eigen::Matrix<double, N, 1> ay = y.cwiseAbs();
  auto f = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
      const double r = e[i] * ay[i] / (t + e[i] * e[i]);
      s += r * r;
    }
    return s - 1.0;
  };
  double lo = 0.0;
  double hi = e.maxCoeff() * ay.norm();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double t = 0.5 * (lo + hi);
  Eigen::Matrix<double, N, 1> x;
  for (int i = 0; i < N; ++i) {
    const double v = e[i] * e[i] * ay[i] / (t + e[i] * e[i]);
    x[i] = std::copysign(v, y[i]);
  }
  return x;
}

}  // namespace

Eigen::Isometry3d Pose::transform() const {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = orientation.toRotationMatrix();
  t.translation() = position;
  return t;
}

Pose Pose::from_transform(const Eigen::Isometry3d& t) {
  Pose p;
  p.position = t.translation();
  p.orientation = Quat(t.rotation()).normalized();
  return p;
}

bool Pose::is_normalized() const { return std::abs(orientation.norm() - 1.0) <= 1e-9; }

Pose pose_from_forward(const Vec3& position, const Vec3& forward, const Vec3& up) {
  const Vec3 z = forward.normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) {
    x = z.cross(Vec3::UnitY());
    if (x.norm() < 1e-9) x = z.cross(Vec3::UnitX());
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  Pose p;
  p.position = position;
  p.orientation = Quat(r).normalized();
  return p;
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  return pose_from_forward(eye, target - eye, up);
}

double orientation_distance(const Quat& a, const Quat& b) { return a.angularDistance(b); }

Aabb Aabb::empty() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {Vec3::Constant(inf), Vec3::Constant(-inf)};
}

Aabb Aabb::around(const Vec3& center, const Vec3& half_extent) {
  return {center - half_extent, center + half_extent};
}

void Aabb::expand(const Vec3& p) {
  min = min.cwiseMin(p);
  max = max.cwiseMax(p);
}

bool Aabb::is_empty() const { return (min.array() > max.array()).any(); }

double Aabb::volume() const {
  if (is_empty()) return 0.0;
  const Vec3 e = extent();
  return e.x() * e.y() * e.z();
}

bool Aabb::contains(const Vec3& p, double slack) const {
  return (p.array() >= min.array() - slack).all() && (p.array() <= max.array() + slack).all();
}

bool Ellipsoid::contains(const Vec3& p) const {
  return (p - center).cwiseQuotient(semi_axes).squaredNorm() <= 1.0;
}

Vec3 Ellipsoid::normal_at(const Vec3& p) const {
  const Vec3 g = (p - center).cwiseQuotient(semi_axes.cwiseProduct(semi_axes));
  return g.normalized();
}

Vec3 Ellipsoid::closest_point(const Vec3& p) const {
  const Vec3 local = p - center;
  const double level = local.cwiseQuotient(semi_axes).norm();
  if (level <= 1.0) {
    if (level == 0.0) return center + Vec3(0.0, 0.0, semi_axes.z());
    return center + local / level;
  }
  return center + closest_on_ellipse<3>(local, semi_axes);
}

double Ellipsoid::distance(const Vec3& p) const {
  if (contains(p)) return 0.0;
  return (closest_point(p) - p).norm();
}

std::pair<Vec3, Vec3> Disc::axes() const {
  Vec3 u = kWorldUp.cross(normal);
  if (u.norm() < 1e-9) u = Vec3::UnitX().cross(normal);
  u.normalize();
  const Vec3 v = normal.cross(u).normalized();
  return {u, v};
}

double Disc::distance(const Vec3& p) const {
  const auto [u, v] = axes();
  const Vec3 d = p - center;
  const double h = d.dot(normal);
  const Vec2 in_plane(d.dot(u), d.dot(v));
  if (in_plane.cwiseQuotient(radii).squaredNorm() <= 1.0) return std::abs(h);
  const Vec2 edge = closest_on_ellipse<2>(in_plane, radii);
  return std::sqrt(h * h + (edge - in_plane).squaredNorm());
}

std::optional<double> intersect(const Ray& ray, const Ellipsoid& e, double t_min) {
  const Vec3 o = (ray.origin - e.center).cwiseQuotient(e.semi_axes);
  const Vec3 d = ray.direction.cwiseQuotient(e.semi_axes);
  const double a = d.squaredNorm();
  const double b = o.dot(d);
  const double c = o.squaredNorm() - 1.0;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = -(b + std::copysign(sq, b));
  double t0 = q / a;
  double t1 = (q != 0.0) ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  if (t0 > t_min) return t0;
  if (t1 > t_min) return t1;
  return std::nullopt;
}

std::optional<double> intersect_plane(const Ray& ray, const Vec3& point, const Vec3& normal,
                                      double t_min) {
  const double denom = ray.direction.dot(normal);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = (point - ray.origin).dot(normal) / denom;
  if (t > t_min) return t;
  return std::nullopt;
}

std::optional<double> intersect(const Ray& ray, const Disc& d, double t_min) {
  const auto t = intersect_plane(ray, d.center, d.normal, t_min);
  if (!t) return std::nullopt;
  const auto [u, v] = d.axes();
  const Vec3 local = ray.at(*t) - d.center;
  const Vec2 in_plane(local.dot(u), local.dot(v));
  if (in_plane.cwiseQuotient(d.radii).squaredNorm() <= 1.0) return t;
  return std::nullopt;
}

PointGrid::PointGrid(std::span<const Vec3> points, std::span<const std::size_t> subset,
                     double cell)
    : points_(points), subset_(subset), cell_(cell) {
  cells_.reserve(subset.size());
  for (std::size_t local = 0; local < subset.size(); ++local) {
    const auto c = cell_of(points_[subset_[local]]);
    cells_[key(c[0], c[1], c[2])].push_back(local);
  }
}

std::array<std::int64_t, 3> PointGrid::cell_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_))};
}

std::uint64_t PointGrid::key(std::int64_t x, std::int64_t y, std::int64_t z) {
  // 21 bits per axis is ample for metre-scale scenes at millimetre cells.
  constexpr std::uint64_t mask = (1ULL << 21) - 1;
  return (static_cast<std::uint64_t>(x) & mask) | ((static_cast<std::uint64_t>(y) & mask) << 21) |
         ((static_cast<std::uint64_t>(z) & mask) << 42);
}

}  // namespace harvest
