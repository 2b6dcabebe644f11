#pragma once

#include "harvest/geometry.hpp"
#include "harvest/kv_text.hpp"
#include "harvest/perception.hpp"
#include "harvest/scene.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace harvest {

struct GraspCandidate {
  Vec3 point;
  Vec3 outward_normal;
  double score = 0.0;
  std::size_t index = 0;  // source cloud index
};

struct GraspWeights {
  double facing = 0.6;
  double flatness = 0.2;
  double centrality = 0.2;
};

enum class GraspMethod { SurfaceHeuristic, ModelFit };

std::string to_string(GraspMethod m);
GraspMethod grasp_method_from_string(const std::string& s);

/// Suction grasp pose (+z = approach = -outward normal) and blade pose
/// (+z toward the trellis, +x = horizontal cutting axis).
struct GraspPlan {
  Pose grasp_pose;
  Pose cut_pose;
  std::vector<GraspCandidate> alternatives;  // non-increasing score
  GraspMethod method = GraspMethod::SurfaceHeuristic;
};

/// Radius of the neighbourhood used for the flatness term.
inline constexpr double kFlatnessRadius = 0.015;
inline constexpr double kDefaultPeduncleOffset = 0.03;

/// Scores every detection point by
///   facing*max(0, cos theta) + flatness*(1 - dispersion) + centrality*(1 - d/h)
/// where theta is between the outward normal and the direction to the camera
/// (-camera_axis), dispersion is 1 minus the mean resultant length of the
/// normals within kFlatnessRadius, d is the distance to the detection
/// centroid within the trellis plane and h the bbox half-diagonal.
/// Sorted by descending score, ties by ascending index.
std::vector<GraspCandidate> rank_grasp_candidates(const ColoredPointCloud& cloud,
                                                  const PepperDetection& detection,
                                                  const Vec3& camera_axis,
                                                  const GraspWeights& weights = {},
                                                  const Vec3& trellis_normal = Vec3::UnitY());

struct EllipsoidFit {
  Vec3 center;
  Vec3 semi_axes;
  double residual_rms = 0.0;  // metres, radial approximation
};

/// Linear least-squares fit of an axis-aligned ellipsoid
///   A x^2 + B y^2 + C z^2 + D x + E y + F z = 1.
EllipsoidFit fit_ellipsoid(const ColoredPointCloud& cloud, const PepperDetection& detection);

struct ModelGrasp {
  EllipsoidFit fit;
  GraspPlan plan;
};

/// Fits the detection and grasps the fitted-surface point nearest the camera.
ModelGrasp fit_model_grasp(const ColoredPointCloud& cloud, const PepperDetection& detection,
                           const Vec3& camera_position,
                           double peduncle_offset = kDefaultPeduncleOffset,
                           const Vec3& trellis_normal = Vec3::UnitY());

/// Grasp at the top candidate; blade at the bbox top-centre raised by
/// `peduncle_offset` along trellis-up.
GraspPlan make_grasp_plan(const std::vector<GraspCandidate>& candidates,
                          const PepperDetection& detection,
                          double peduncle_offset = kDefaultPeduncleOffset,
                          GraspMethod method = GraspMethod::SurfaceHeuristic,
                          const Vec3& trellis_normal = Vec3::UnitY());

KvDocument grasp_plan_to_kv(const GraspPlan& plan);
GraspPlan grasp_plan_from_kv(const KvDocument& doc);

}  // namespace harvest
