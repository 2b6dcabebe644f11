#include "harvest/arm.hpp"

#include "harvest/errors.hpp"
#include "harvest/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace harvest {

namespace {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector7d = Eigen::Matrix<double, 7, 1>;

Eigen::Isometry3d translation(double x, double y, double z) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translation() = Vec3(x, y, z);
  return t;
}

// World frame of every joint (after its offset, before its rotation) and the
// tool frame.
struct ChainFrames {
  std::array<Eigen::Isometry3d, kJointCount> joint;
  Eigen::Isometry3d tool;
};

ChainFrames chain_frames(const ArmModel& arm, const JointConfig& q) {
  ChainFrames f;
  Eigen::Isometry3d t = arm.base.transform();
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const JointSpec& j = arm.joints[i];
    t = t * j.offset;
    f.joint[i] = t;
    t = t * Eigen::AngleAxisd(q[i], j.axis.normalized());
  }
  f.tool = t * arm.tool;
  return f;
}

Vector6d pose_error(const Eigen::Isometry3d& current, const Pose& target) {
  Vector6d e;
  e.head<3>() = target.position - current.translation();
  const Eigen::Matrix3d r_err = target.orientation.toRotationMatrix() * current.rotation().transpose();
  const Eigen::AngleAxisd aa(r_err);
  e.tail<3>() = aa.angle() * aa.axis();
  return e;
}

}  // namespace

void ArmModel::validate() const {
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const JointSpec& j = joints[i];
    if (!(j.lower < j.upper)) throw ConfigError("joint " + std::to_string(i + 1) + ": lower >= upper");
    if (!(j.max_speed > 0.0)) throw ConfigError("joint " + std::to_string(i + 1) + ": speed must be positive");
    if (j.axis.norm() < 1e-9) throw ConfigError("joint " + std::to_string(i + 1) + ": zero axis");
  }
  if (!base.is_normalized()) throw ConfigError("arm base orientation must be a unit quaternion");
}

bool ArmModel::within_limits(const JointConfig& q, double slack) const {
  for (std::size_t i = 0; i < kJointCount; ++i) {
    if (!(q[i] >= joints[i].lower - slack && q[i] <= joints[i].upper + slack)) return false;
  }
  return true;
}

double ArmModel::total_link_length() const {
  double sum = tool.translation().norm();
  for (const auto& j : joints) sum += j.offset.translation().norm();
  return sum;
}

ArmModel ArmModel::generic(const Pose& base) {
  ArmModel arm;
  arm.base = base;
  auto& j = arm.joints;
  j[0] = {translation(0, 0, 0.30), Vec3::UnitZ(), -2.9, 2.9, 1.2};
  j[1] = {Eigen::Isometry3d::Identity(), Vec3::UnitY(), -2.0, 2.0, 1.2};
  j[2] = {translation(0, 0, 0.35), Vec3::UnitZ(), -2.9, 2.9, 1.5};
  Eigen::Isometry3d elbow = Eigen::Isometry3d::Identity();
  elbow.linear() = Eigen::AngleAxisd(std::numbers::pi / 2.0, Vec3::UnitY()).toRotationMatrix();
  j[3] = {elbow, Vec3::UnitY(), -1.45, 1.5, 1.5};
  j[4] = {translation(0, 0, 0.30), Vec3::UnitZ(), -2.9, 2.9, 2.0};
  j[5] = {Eigen::Isometry3d::Identity(), Vec3::UnitY(), -2.0, 2.0, 2.0};
  j[6] = {translation(0, 0, 0.10), Vec3::UnitZ(), -2.9, 2.9, 2.5};
  arm.tool = translation(0, 0, 0.15);
  return arm;
}

Pose generic_home_pose() {
  return {Vec3(0.55, 0.0, 0.65), Quat(Eigen::AngleAxisd(std::numbers::pi / 2.0, Vec3::UnitY()))};
}

Pose forward_kinematics(const ArmModel& arm, const JointConfig& q) {
  if (!arm.within_limits(q)) throw LimitError("joint configuration outside limits");
  return Pose::from_transform(chain_frames(arm, q).tool);
}

Eigen::Matrix<double, 6, 7> jacobian(const ArmModel& arm, const JointConfig& q) {
  const ChainFrames f = chain_frames(arm, q);
  const Vec3 tip = f.tool.translation();
  Eigen::Matrix<double, 6, 7> jac;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const Vec3 axis = f.joint[i].rotation() * arm.joints[i].axis.normalized();
    const Vec3 origin = f.joint[i].translation();
    jac.block<3, 1>(0, static_cast<Eigen::Index>(i)) = axis.cross(tip - origin);
    jac.block<3, 1>(3, static_cast<Eigen::Index>(i)) = axis;
  }
  return jac;
}

namespace {

struct DlsResult {
  IkSolution solution;
  bool converged = false;
};

DlsResult damped_least_squares(const ArmModel& arm, const Pose& target, const JointConfig& seed,
                               const IkOptions& options) {
  JointConfig q = seed;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    q[i] = std::clamp(q[i], arm.joints[i].lower, arm.joints[i].upper);
  }

  auto converged = [&](const Vector6d& e) {
    return e.head<3>().norm() < options.position_tolerance &&
           e.tail<3>().norm() < options.orientation_tolerance;
  };

  Vector6d err = pose_error(chain_frames(arm, q).tool, target);
  double lambda = options.damping;
  int iter = 0;
  for (;; ++iter) {
    if (converged(err)) return {{q, iter, err.head<3>().norm(), err.tail<3>().norm()}, true};
    if (iter >= options.max_iterations) break;

    const Eigen::Matrix<double, 6, 7> jac = jacobian(arm, q);
    const Eigen::Matrix<double, 6, 6> jjt =
        jac * jac.transpose() + lambda * lambda * Eigen::Matrix<double, 6, 6>::Identity();
    Vector7d dq = jac.transpose() * jjt.ldlt().solve(err);
    const double biggest = dq.cwiseAbs().maxCoeff();
    if (biggest > options.max_step) dq *= options.max_step / biggest;

    JointConfig trial = q;
    for (std::size_t i = 0; i < kJointCount; ++i) {
      trial[i] = std::clamp(q[i] + dq[static_cast<Eigen::Index>(i)], arm.joints[i].lower,
                            arm.joints[i].upper);
    }
    const Vector6d trial_err = pose_error(chain_frames(arm, trial).tool, target);
    if (trial_err.norm() < err.norm()) {
      q = trial;
      err = trial_err;
      lambda = std::max(options.damping, 0.5 * lambda);
    } else {
      // Levenberg-style backoff: keep q, damp harder.
      lambda = std::min(4.0 * lambda, 10.0);
      if (lambda >= 10.0) {
        q = trial;
        err = trial_err;
        lambda = options.damping;
      }
    }
  }
  return {{q, iter, err.head<3>().norm(), err.tail<3>().norm()}, false};
}

}  // namespace

IkSolution solve_ik(const ArmModel& arm, const Pose& target, const JointConfig& seed,
                    const IkOptions& options) {
  if (!(options.position_tolerance > 0.0)) throw ArgumentError("IK tolerance must be positive");
  if (options.restarts < 0) throw ArgumentError("IK restarts must be non-negative");
  if ((target.position - arm.base.position).norm() > arm.total_link_length()) {
    throw UnreachableError("target beyond total link length");
  }

  DlsResult best = damped_least_squares(arm, target, seed, options);
  int iterations = best.solution.iterations;
  // Fixed restart sequence: results depend only on the inputs.
  RngStream restart_rng(0x1c5eedULL);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (int r = 0; r < options.restarts && !best.converged; ++r) {
    JointConfig s;
    for (std::size_t i = 0; i < kJointCount; ++i) {
      const auto& j = arm.joints[i];
      s[i] = 0.5 * (j.lower + j.upper) + 0.8 * (j.upper - j.lower) * unit(restart_rng);
    }
    DlsResult attempt = damped_least_squares(arm, target, s, options);
    iterations += attempt.solution.iterations;
    if (attempt.converged || attempt.solution.position_error < best.solution.position_error) {
      best = attempt;
    }
  }
  if (!best.converged) {
    throw UnreachableError("IK did not converge (position error " +
                           std::to_string(best.solution.position_error) + " m)");
  }
  best.solution.iterations = iterations;
  return best.solution;
}

JointConfig inverse_kinematics(const ArmModel& arm, const Pose& target, const JointConfig& seed,
                               double tolerance, int max_iterations) {
  IkOptions o;
  o.position_tolerance = tolerance;
  o.max_iterations = max_iterations;
  return solve_ik(arm, target, seed, o).q;
}

std::string to_string(const ScanMode& m) {
  if (m.kind == ScanMode::Kind::SingleView) return "single";
  return "arc:" + std::to_string(m.waypoints);
}

ScanMode scan_mode_from_string(const std::string& s) {
  if (s == "single" || s == "SingleView") return ScanMode::single_view();
  if (s.rfind("arc:", 0) == 0) {
    const int k = std::stoi(s.substr(4));
    if (k < 1) throw ConfigError("arc scan needs k >= 1");
    return ScanMode::arc(k);
  }
  throw ConfigError("unknown scan mode '" + s + "' (expected 'single' or 'arc:<k>')");
}

std::vector<Pose> plan_scan_trajectory(const Aabb& region, const ScanMode& mode, double standoff,
                                       const Vec3& facing, double arc_span) {
  if (!(standoff > 0.0)) throw ArgumentError("scan standoff must be positive");
  if (mode.kind == ScanMode::Kind::Arc && mode.waypoints < 1) {
    throw ArgumentError("arc scan needs at least one waypoint");
  }
  const Vec3 centre = region.center();
  Vec3 dir = facing - facing.dot(kWorldUp) * kWorldUp;
  if (dir.norm() < 1e-9) throw ArgumentError("scan facing direction must not be vertical");
  dir.normalize();

  const bool single = mode.kind == ScanMode::Kind::SingleView || mode.waypoints == 1 ||
                      region.volume() <= 0.0;
  if (single) return {look_at(centre + standoff * dir, centre)};

  std::vector<Pose> out;
  out.reserve(static_cast<std::size_t>(mode.waypoints));
  for (int i = 0; i < mode.waypoints; ++i) {
    const double phi = -0.5 * arc_span + arc_span * i / (mode.waypoints - 1);
    const Vec3 d = Eigen::AngleAxisd(phi, kWorldUp) * dir;
    out.push_back(look_at(centre + standoff * d, centre));
  }
  return out;
}

double trajectory_duration(const ArmModel& arm, std::span<const JointConfig> waypoints) {
  for (const auto& q : waypoints) {
    if (!arm.within_limits(q, 1e-9)) throw LimitError("waypoint outside joint limits");
  }
  double total = 0.0;
  for (std::size_t k = 1; k < waypoints.size(); ++k) {
    double segment = 0.0;
    for (std::size_t i = 0; i < kJointCount; ++i) {
      segment = std::max(segment, std::abs(waypoints[k][i] - waypoints[k - 1][i]) / arm.joints[i].max_speed);
    }
    total += segment;
  }
  return total;
}

void arm_to_kv(const ArmModel& arm, KvDocument& doc, const std::string& p) {
  doc.set(p + "base.position", arm.base.position);
  doc.set(p + "base.orientation", arm.base.orientation);
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const JointSpec& j = arm.joints[i];
    const std::string k = p + "joint." + std::to_string(i + 1) + ".";
    doc.set(k + "offset.translation", Vec3(j.offset.translation()));
    doc.set(k + "offset.rotation", Quat(j.offset.rotation()));
    doc.set(k + "axis", j.axis);
    doc.set(k + "limits", Vec2(j.lower, j.upper));
    doc.set(k + "max_speed", j.max_speed);
  }
  doc.set(p + "tool.translation", Vec3(arm.tool.translation()));
  doc.set(p + "tool.rotation", Quat(arm.tool.rotation()));
}

ArmModel arm_from_kv(const KvDocument& doc, const std::string& p) {
  ArmModel arm = ArmModel::generic();
  if (doc.has(p + "base.position")) arm.base.position = doc.get_vec3(p + "base.position");
  if (doc.has(p + "base.orientation")) arm.base.orientation = doc.get_quat(p + "base.orientation");
  for (std::size_t i = 0; i < kJointCount; ++i) {
    JointSpec& j = arm.joints[i];
    const std::string k = p + "joint." + std::to_string(i + 1) + ".";
    if (doc.has(k + "offset.translation")) j.offset.translation() = doc.get_vec3(k + "offset.translation");
    if (doc.has(k + "offset.rotation")) {
      j.offset.linear() = doc.get_quat(k + "offset.rotation").normalized().toRotationMatrix();
    }
    if (doc.has(k + "axis")) j.axis = doc.get_vec3(k + "axis");
    if (doc.has(k + "limits")) {
      const Vec2 l = doc.get_vec2(k + "limits");
      j.lower = l.x();
      j.upper = l.y();
    }
    j.max_speed = doc.get_double(k + "max_speed", j.max_speed);
  }
  if (doc.has(p + "tool.translation")) arm.tool.translation() = doc.get_vec3(p + "tool.translation");
  if (doc.has(p + "tool.rotation")) {
    arm.tool.linear() = doc.get_quat(p + "tool.rotation").normalized().toRotationMatrix();
  }
  arm.validate();
  return arm;
}

}  // namespace harvest
