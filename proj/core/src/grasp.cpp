#include "harvest/grasp.hpp"

#include "harvest/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace harvest {

std::string to_string(GraspMethod m) {
  return m == GraspMethod::ModelFit ? "model_fit" : "surface_heuristic";
}

GraspMethod grasp_method_from_string(const std::string& s) {
  if (s == "model_fit" || s == "ModelFit") return GraspMethod::ModelFit;
  if (s == "surface_heuristic" || s == "SurfaceHeuristic") return GraspMethod::SurfaceHeuristic;
  throw ConfigError("unknown grasp method '" + s + "'");
}

std::vector<GraspCandidate> rank_grasp_candidates(const ColoredPointCloud& cloud,
                                                  const PepperDetection& detection,
                                                  const Vec3& camera_axis,
                                                  const GraspWeights& weights,
                                                  const Vec3& trellis_normal) {
  if (detection.point_indices.empty()) throw EmptyInputError("detection has no points");
  if (!cloud.has_normals()) throw ArgumentError("grasp ranking needs a cloud with normals");
  cloud.validate();

  const auto& idx = detection.point_indices;
  const Vec3 toward_camera = -camera_axis.normalized();
  const Vec3 n_trellis = trellis_normal.normalized();
  const double half_diag = detection.bbox.half_diagonal();
  const PointGrid grid(cloud.positions, idx, kFlatnessRadius);

  std::vector<GraspCandidate> out;
  out.reserve(idx.size());
  for (std::size_t local = 0; local < idx.size(); ++local) {
    const std::size_t i = idx[local];
    const Vec3& p = cloud.positions[i];
    const Vec3& n = cloud.normals[i];

    const double facing = std::max(0.0, n.dot(toward_camera));

    Vec3 resultant = Vec3::Zero();
    int neighbours = 0;
    grid.for_each_within(p, kFlatnessRadius, [&](std::size_t other) {
      resultant += cloud.normals[idx[other]];
      ++neighbours;
    });
    const double flatness = neighbours > 0 ? std::min(1.0, resultant.norm() / neighbours) : 1.0;

    Vec3 offset = p - detection.centroid;
    offset -= offset.dot(n_trellis) * n_trellis;
    const double centrality =
        half_diag > 0.0 ? std::max(0.0, 1.0 - offset.norm() / half_diag) : 1.0;

    const double score = weights.facing * facing + weights.flatness * flatness +
                         weights.centrality * centrality;
    out.push_back({p, n, score, i});
  }
  std::sort(out.begin(), out.end(), [](const GraspCandidate& a, const GraspCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  return out;
}

EllipsoidFit fit_ellipsoid(const ColoredPointCloud& cloud, const PepperDetection& detection) {
  const auto& idx = detection.point_indices;
  if (idx.size() < 10) {
    throw InsufficientDataError("ellipsoid fit needs at least 10 points, got " +
                                std::to_string(idx.size()));
  }
  Vec3 mean = Vec3::Zero();
  for (std::size_t i : idx) mean += cloud.positions[i];
  mean /= static_cast<double>(idx.size());
  double scale = 0.0;
  for (std::size_t i : idx) scale = std::max(scale, (cloud.positions[i] - mean).norm());
  if (!(scale > 0.0)) throw FitFailureError("all points coincide");

  const auto rows = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd a(rows, 6);
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec3 q = (cloud.positions[idx[static_cast<std::size_t>(r)]] - mean) / scale;
    a.row(r) << q.x() * q.x(), q.y() * q.y(), q.z() * q.z(), q.x(), q.y(), q.z();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 6) throw FitFailureError("rank-deficient point configuration");
  const Eigen::VectorXd c = qr.solve(rhs);

  const Vec3 quad(c[0], c[1], c[2]);
  const Vec3 lin(c[3], c[4], c[5]);
  if ((quad.array() <= 0.0).any()) throw FitFailureError("fitted quadric is not an ellipsoid");
  const Vec3 center_local = -lin.cwiseQuotient(2.0 * quad);
  const double g = 1.0 + (lin.cwiseProduct(lin).cwiseQuotient(4.0 * quad)).sum();
  if (!(g > 0.0)) throw FitFailureError("fitted quadric is empty");

  EllipsoidFit fit;
  fit.center = mean + scale * center_local;
  fit.semi_axes = scale * (Vec3::Constant(g).cwiseQuotient(quad)).cwiseSqrt();

  const double mean_axis = fit.semi_axes.mean();
  double ss = 0.0;
  for (std::size_t i : idx) {
    const double level = (cloud.positions[i] - fit.center).cwiseQuotient(fit.semi_axes).norm();
    const double r = (level - 1.0) * mean_axis;
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(idx.size()));
  return fit;
}

ModelGrasp fit_model_grasp(const ColoredPointCloud& cloud, const PepperDetection& detection,
                           const Vec3& camera_position, double peduncle_offset,
                           const Vec3& trellis_normal) {
  ModelGrasp out;
  out.fit = fit_ellipsoid(cloud, detection);
  const Ellipsoid body{out.fit.center, out.fit.semi_axes};
  GraspCandidate c;
  c.point = body.closest_point(camera_position);
  c.outward_normal = body.normal_at(c.point);
  c.score = 1.0;
  c.index = detection.point_indices.front();
  out.plan = make_grasp_plan({c}, detection, peduncle_offset, GraspMethod::ModelFit, trellis_normal);
  return out;
}

GraspPlan make_grasp_plan(const std::vector<GraspCandidate>& candidates,
                          const PepperDetection& detection, double peduncle_offset,
                          GraspMethod method, const Vec3& trellis_normal) {
  if (candidates.empty()) throw PlanningError("no grasp candidates");
  if (detection.bbox.is_empty()) throw PlanningError("detection has an empty bounding box");
  GraspPlan plan;
  plan.method = method;
  plan.alternatives = candidates;
  std::stable_sort(plan.alternatives.begin(), plan.alternatives.end(),
                   [](const GraspCandidate& a, const GraspCandidate& b) { return a.score > b.score; });
  const GraspCandidate& top = plan.alternatives.front();
  plan.grasp_pose = pose_from_forward(top.point, -top.outward_normal);

  Vec3 top_centre = detection.bbox.center();
  top_centre.z() = detection.bbox.max.z();
  plan.cut_pose = pose_from_forward(top_centre + peduncle_offset * kWorldUp, -trellis_normal);
  return plan;
}

KvDocument grasp_plan_to_kv(const GraspPlan& plan) {
  KvDocument doc;
  doc.set("method", to_string(plan.method));
  doc.set("grasp.position", plan.grasp_pose.position);
  doc.set("grasp.orientation", plan.grasp_pose.orientation);
  doc.set("cut.position", plan.cut_pose.position);
  doc.set("cut.orientation", plan.cut_pose.orientation);
  doc.set("alternative.count", static_cast<std::int64_t>(plan.alternatives.size()));
  for (std::size_t k = 0; k < plan.alternatives.size(); ++k) {
    const auto& c = plan.alternatives[k];
    const std::string p = "alternative." + std::to_string(k) + ".";
    doc.set(p + "point", c.point);
    doc.set(p + "normal", c.outward_normal);
    doc.set(p + "score", c.score);
    doc.set(p + "index", static_cast<std::uint64_t>(c.index));
  }
  return doc;
}

GraspPlan grasp_plan_from_kv(const KvDocument& doc) {
  GraspPlan plan;
  plan.method = grasp_method_from_string(doc.get("method"));
  plan.grasp_pose = {doc.get_vec3("grasp.position"), doc.get_quat("grasp.orientation")};
  plan.cut_pose = {doc.get_vec3("cut.position"), doc.get_quat("cut.orientation")};
  const auto n = doc.get_int("alternative.count");
  for (std::int64_t k = 0; k < n; ++k) {
    const std::string p = "alternative." + std::to_string(k) + ".";
    plan.alternatives.push_back({doc.get_vec3(p + "point"), doc.get_vec3(p + "normal"),
                                 doc.get_double(p + "score"),
                                 static_cast<std::size_t>(doc.get_uint(p + "index"))});
  }
  return plan;
}

}  // namespace harvest
