#pragma once

#include "harvest/geometry.hpp"
#include "harvest/kv_text.hpp"

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace harvest {

inline constexpr std::size_t kJointCount = 7;

struct JointSpec {
  Eigen::Isometry3d offset = Eigen::Isometry3d::Identity();  // parent frame -> joint frame
  Vec3 axis = Vec3::UnitZ();                                   // in the joint frame
  double lower = -std::numbers::pi;
  double upper = std::numbers::pi;
  double max_speed = 1.0;  // rad/s
};

struct JointConfig {
  std::array<double, kJointCount> angles{};

  double& operator[](std::size_t i) { return angles[i]; }
  double operator[](std::size_t i) const { return angles[i]; }
  friend bool operator==(const JointConfig&, const JointConfig&) = default;
};

/// Serial 7-joint chain: base, then per joint its offset transform followed
/// by a rotation about its axis, then the tool transform.
struct ArmModel {
  std::array<JointSpec, kJointCount> joints;
  Eigen::Isometry3d tool = Eigen::Isometry3d::Identity();
  Pose base;

  void validate() const;
  bool within_limits(const JointConfig& q, double slack = 0.0) const;
  /// Sum of all link translations including the tool; no target farther
  /// than this from the base origin is reachable.
  double total_link_length() const;

  /// Generic 7-DOF arm with 0.9 m reach from the shoulder, 1.2 m total
  /// link length. At q = 0 the upper arm is vertical and the forearm
  /// horizontal; see generic_home_pose().
  static ArmModel generic(const Pose& base = {});
};

/// Tool pose of ArmModel::generic() at q = 0 with an identity base:
/// position (0.55, 0, 0.65), tool +z along base +x.
Pose generic_home_pose();

/// Throws LimitError when q is outside the joint limits.
Pose forward_kinematics(const ArmModel& arm, const JointConfig& q);

/// 6 x 7 geometric Jacobian (linear rows first) at q.
Eigen::Matrix<double, 6, 7> jacobian(const ArmModel& arm, const JointConfig& q);

struct IkOptions {
  double position_tolerance = 1e-4;      // m
  double orientation_tolerance = 0.01;   // rad
  int max_iterations = 200;
  double damping = 0.05;
  double max_step = 0.4;  // rad per iteration, per joint
  int restarts = 8;       // extra runs from fixed pseudo-random seeds after a failure
};

struct IkSolution {
  JointConfig q;
  int iterations = 0;
  double position_error = 0.0;
  double orientation_error = 0.0;
};

/// Damped-least-squares IK from `seed`; if that stalls, retries from a fixed
/// sequence of seeds spread over the joint ranges. Throws UnreachableError
/// when the target is beyond the arm's total link length or no run
/// converges within max_iterations.
IkSolution solve_ik(const ArmModel& arm, const Pose& target, const JointConfig& seed,
                    const IkOptions& options = {});

JointConfig inverse_kinematics(const ArmModel& arm, const Pose& target, const JointConfig& seed,
                               double tolerance, int max_iterations);

struct ScanMode {
  enum class Kind { SingleView, Arc };
  Kind kind = Kind::SingleView;
  int waypoints = 1;

  static ScanMode single_view() { return {Kind::SingleView, 1}; }
  static ScanMode arc(int k) { return {Kind::Arc, k}; }
};

std::string to_string(const ScanMode& m);
ScanMode scan_mode_from_string(const std::string& s);  // "single" or "arc:<k>"

inline constexpr double kDefaultArcSpan = std::numbers::pi / 3.0;

/// Camera poses looking at the region centre. `facing` is the horizontal
/// direction from the region toward the sensor side; Arc(k) spreads k poses
/// evenly over `arc_span` radians centred on it.
std::vector<Pose> plan_scan_trajectory(const Aabb& region, const ScanMode& mode, double standoff,
                                       const Vec3& facing = Vec3::UnitY(),
                                       double arc_span = kDefaultArcSpan);

/// Sum over consecutive waypoints of max_j |dq_j| / speed_j.
double trajectory_duration(const ArmModel& arm, std::span<const JointConfig> waypoints);

void arm_to_kv(const ArmModel& arm, KvDocument& doc, const std::string& prefix = "arm.");
ArmModel arm_from_kv(const KvDocument& doc, const std::string& prefix = "arm.");

}  // namespace harvest
