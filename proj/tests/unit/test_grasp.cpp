#include "harvest/arm.hpp"
#include "harvest/errors.hpp"
#include "harvest/grasp.hpp"
#include "harvest/perception.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

using namespace harvest;
using harvest::testing::single_pepper_scene;

namespace {

constexpr double kPi = std::numbers::pi;

PepperDetection detection_of(const ColoredPointCloud& cloud, std::vector<std::size_t> idx) {
  PepperDetection d;
  d.point_indices = std::move(idx);
  d.point_count = d.point_indices.size();
  d.bbox = Aabb::empty();
  for (std::size_t i : d.point_indices) {
    d.centroid += cloud.positions[i];
    d.bbox.expand(cloud.positions[i]);
  }
  d.centroid /= static_cast<double>(d.point_count);
  return d;
}

PepperDetection detect_all(const ColoredPointCloud& cloud) {
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), 0);
  return detection_of(cloud, idx);
}

// Front hemisphere (+y toward the camera) of a sphere, with outward normals.
ColoredPointCloud hemisphere(double r, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  ColoredPointCloud c;
  while (static_cast<int>(c.size()) < n) {
    Vec3 v(g(rng), g(rng), g(rng));
    v.normalize();
    if (v.y() < 0.0) v.y() = -v.y();
    c.positions.push_back(r * v);
    c.normals.push_back(v);
    c.colors.push_back({0.8, 0.05, 0.05});
  }
  return c;
}

// Written-out score of one point, independent of the spatial grid.
double oracle_score(const ColoredPointCloud& c, const PepperDetection& d, std::size_t i,
                    const Vec3& camera_axis, const GraspWeights& w, const Vec3& tn) {
  const double facing = std::max(0.0, c.normals[i].dot(-camera_axis));
  Vec3 sum = Vec3::Zero();
  int count = 0;
  for (std::size_t j : d.point_indices) {
    if ((c.positions[j] - c.positions[i]).norm() <= kFlatnessRadius) {
      sum += c.normals[j];
      ++count;
    }
  }
  const double flatness = std::min(1.0, sum.norm() / count);
  Vec3 off = c.positions[i] - d.centroid;
  off -= off.dot(tn) * tn;
  const double h = 0.5 * (d.bbox.max - d.bbox.min).norm();
  const double centrality = std::max(0.0, 1.0 - off.norm() / h);
  return w.facing * facing + w.flatness * flatness + w.centrality * centrality;
}

ColoredPointCloud ellipsoid_samples(const Vec3& c, const Vec3& a, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, 2.0 * kPi);
  ColoredPointCloud cloud;
  for (int i = 0; i < n; ++i) {
    const double z = u(rng), phi = ph(rng), s = std::sqrt(1.0 - z * z);
    cloud.positions.push_back(c + Vec3(a.x() * s * std::cos(phi), a.y() * s * std::sin(phi), a.z() * z));
    cloud.colors.push_back({0.8, 0.05, 0.05});
  }
  return cloud;
}

// Zero-noise scan of the default single pepper from three arc views.
ColoredPointCloud scanned_pepper(const Scene& s) {
  const SweetPepper& p = s.peppers[0];
  ColoredPointCloud cloud;
  for (const Pose& view : plan_scan_trajectory(Aabb::around(p.centroid, p.semi_axes), ScanMode::arc(3),
                                               0.35, Vec3::UnitY())) {
    cloud.append(render_pointcloud(s, view, SensorModel::noiseless()));
  }
  return cloud;
}

PepperDetection red_detection(const ColoredPointCloud& cloud) {
  const auto dets = segment_clusters(cloud, detect_color(cloud, ColorModel::ripe_red()), 0.02, 30);
  EXPECT_EQ(dets.size(), 1u);
  return dets.at(0);
}

}  // namespace

TEST(RankGrasp, SinglePointFacingCameraHasFullFacingTerm) {
  ColoredPointCloud c;
  c.positions = {Vec3(0.0, 0.1, 0.8)};
  c.normals = {Vec3::UnitY()};
  c.colors = {{1, 0, 0}};
  const auto ranked = rank_grasp_candidates(c, detect_all(c), -Vec3::UnitY(), {1.0, 0.0, 0.0});
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_DOUBLE_EQ(ranked[0].score, 1.0);
  EXPECT_EQ(ranked[0].index, 0u);
}

TEST(RankGrasp, HemisphereTopCandidateMatchesBruteForce) {
  const ColoredPointCloud c = hemisphere(0.04, 800, 3);
  const PepperDetection d = detect_all(c);
  const Vec3 axis = -Vec3::UnitY();
  const GraspWeights w;
  const auto ranked = rank_grasp_candidates(c, d, axis, w, Vec3::UnitY());
  ASSERT_EQ(ranked.size(), c.size());
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double s = oracle_score(c, d, i, axis, w, Vec3::UnitY());
    if (s > best_score) best_score = s, best = i;
  }
  for (const auto& cand : ranked) {
    EXPECT_NEAR(cand.score, oracle_score(c, d, cand.index, axis, w, Vec3::UnitY()), 1e-12);
  }
  EXPECT_EQ(ranked[0].index, best);
  const double angle = std::acos(std::clamp(ranked[0].outward_normal.dot(-axis), -1.0, 1.0));
  EXPECT_LT(angle, 10.0 * kPi / 180.0);
}

TEST(RankGrasp, SmallerNormalAngleRanksFirst) {
  ColoredPointCloud c;
  auto tilted = [](double deg) {
    const double t = deg * kPi / 180.0;
    return Vec3(std::sin(t), std::cos(t), 0.0);
  };
  // Mirror positions: equal centrality, isolated points: equal flatness.
  c.positions = {Vec3(0.05, 0.0, 0.0), Vec3(-0.05, 0.0, 0.0)};
  c.normals = {tilted(40.0), tilted(-10.0)};
  c.colors = {{1, 0, 0}, {1, 0, 0}};
  const auto ranked = rank_grasp_candidates(c, detect_all(c), -Vec3::UnitY());
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].index, 1u);
}

TEST(RankGrasp, ScalingWeightsLeavesRankingUnchanged) {
  const ColoredPointCloud c = hemisphere(0.04, 400, 9);
  const PepperDetection d = detect_all(c);
  const GraspWeights w{0.5, 0.3, 0.2};
  const auto base = rank_grasp_candidates(c, d, -Vec3::UnitY(), w);
  for (double k : {0.25, 2.0, 8.0}) {
    const auto scaled = rank_grasp_candidates(c, d, -Vec3::UnitY(), {k * w.facing, k * w.flatness, k * w.centrality});
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(base[i].index, scaled[i].index);
  }
  // Inexact scale factor: any reordering must be between scores equal to rounding.
  const double k = 3.7;
  const auto scaled = rank_grasp_candidates(c, d, -Vec3::UnitY(), {k * w.facing, k * w.flatness, k * w.centrality});
  EXPECT_EQ(base[0].index, scaled[0].index);
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].index != scaled[i].index) {
      EXPECT_NEAR(base[i].score * k, scaled[i].score, 1e-12);
    }
  }
}

TEST(RankGrasp, ScoresStayInUnitIntervalForNormalisedWeights) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ColoredPointCloud c = hemisphere(0.05, 300, 2);
  const PepperDetection d = detect_all(c);
  for (int trial = 0; trial < 20; ++trial) {
    double a = u(rng), b = u(rng), e = u(rng);
    const double s = a + b + e;
    const Vec3 axis = Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5).normalized();
    for (const auto& cand : rank_grasp_candidates(c, d, axis, {a / s, b / s, e / s})) {
      EXPECT_GE(cand.score, 0.0);
      EXPECT_LE(cand.score, 1.0 + 1e-12);
    }
  }
}

TEST(RankGrasp, EmptyDetectionOrMissingNormalsIsAnError) {
  ColoredPointCloud c = hemisphere(0.04, 10, 1);
  EXPECT_THROW(rank_grasp_candidates(c, PepperDetection{}, -Vec3::UnitY()), EmptyInputError);
  c.normals.clear();
  EXPECT_THROW(rank_grasp_candidates(c, detect_all(c), -Vec3::UnitY()), ArgumentError);
}

TEST(FitEllipsoid, RecoversKnownEllipsoidFromExactSamples) {
  const Vec3 centre(0.3, 0.1, 0.9), axes(0.04, 0.035, 0.05);
  const auto cloud = ellipsoid_samples(centre, axes, 500, 5);
  const EllipsoidFit fit = fit_ellipsoid(cloud, detect_all(cloud));
  EXPECT_LT((fit.center - centre).norm(), 1e-3);
  EXPECT_LT((fit.semi_axes - axes).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(fit.residual_rms, 1e-9);
}

TEST(FitEllipsoid, SphereAxesWithinOnePercent) {
  const double r = 0.045;
  const auto cloud = ellipsoid_samples({0.0, 0.0, 1.0}, Vec3::Constant(r), 500, 6);
  const EllipsoidFit fit = fit_ellipsoid(cloud, detect_all(cloud));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(fit.semi_axes[i], r, 0.01 * r);
}

TEST(FitEllipsoid, TooFewOrDegeneratePointsFail) {
  const auto five = ellipsoid_samples(Vec3::Zero(), Vec3::Constant(0.04), 5, 1);
  EXPECT_THROW(fit_ellipsoid(five, detect_all(five)), InsufficientDataError);
  ColoredPointCloud flat;
  for (int i = 0; i < 40; ++i) {
    flat.positions.push_back(Vec3(0.001 * i, 0.002 * (i % 7), 0.0));
    flat.colors.push_back({1, 0, 0});
  }
  EXPECT_THROW(fit_ellipsoid(flat, detect_all(flat)), FitFailureError);
}

TEST(MakePlan, CutPoseSitsOffsetAboveBboxTopCentre) {
  ColoredPointCloud c = hemisphere(0.04, 200, 4);
  for (auto& p : c.positions) p += Vec3(0.2, 0.1, 0.8);
  const PepperDetection d = detect_all(c);
  const auto ranked = rank_grasp_candidates(c, d, -Vec3::UnitY());
  Vec3 top(d.bbox.center().x(), d.bbox.center().y(), d.bbox.max.z());
  for (double offset : {0.03, 0.0}) {
    const GraspPlan plan = make_grasp_plan(ranked, d, offset);
    EXPECT_LT((plan.cut_pose.position - (top + offset * Vec3::UnitZ())).norm(), 1e-12);
    EXPECT_NEAR(plan.cut_pose.x_axis().z(), 0.0, 1e-12);
    EXPECT_NEAR(plan.cut_pose.x_axis().dot(Vec3::UnitY()), 0.0, 1e-12);
    EXPECT_LT((plan.grasp_pose.z_axis() + ranked[0].outward_normal).norm(), 1e-12);
    EXPECT_EQ(plan.grasp_pose.position, ranked[0].point);
    for (std::size_t i = 1; i < plan.alternatives.size(); ++i) {
      EXPECT_GE(plan.alternatives[i - 1].score, plan.alternatives[i].score);
    }
  }
  EXPECT_THROW(make_grasp_plan({}, d), PlanningError);
}

TEST(MakePlan, ZeroNoiseCutPoseLateralErrorUnderFiveMillimetres) {
  const Scene s = single_pepper_scene({0.12, 0.1, 0.8});
  const SweetPepper& p = s.peppers[0];
  const ColoredPointCloud cloud = scanned_pepper(s);
  const PepperDetection d = red_detection(cloud);
  const auto ranked = rank_grasp_candidates(cloud, d, -Vec3::UnitY());
  const GraspPlan plan = make_grasp_plan(ranked, d);
  const Vec3 cut = plan.cut_pose.position;
  const Vec3 on_axis = p.peduncle.point_at_height(cut.z() - p.peduncle.attach_point.z());
  EXPECT_LT(std::abs((cut - on_axis).dot(plan.cut_pose.x_axis())), 0.005);
}

TEST(MakePlan, SerializationRoundTrips) {
  ColoredPointCloud c = hemisphere(0.04, 50, 8);
  const PepperDetection d = detect_all(c);
  const GraspPlan plan = make_grasp_plan(rank_grasp_candidates(c, d, -Vec3::UnitY()), d);
  const GraspPlan back = grasp_plan_from_kv(KvDocument::parse(grasp_plan_to_kv(plan).to_string()));
  EXPECT_EQ(grasp_plan_to_kv(back).to_string(), grasp_plan_to_kv(plan).to_string());
  EXPECT_EQ(back.alternatives.size(), plan.alternatives.size());
}

TEST(ModelFit, RenderedPepperSemiAxesWithinFivePercent) {
  const Scene s = single_pepper_scene();
  const SweetPepper& p = s.peppers[0];
  const ColoredPointCloud cloud = scanned_pepper(s);
  const PepperDetection d = red_detection(cloud);
  const ModelGrasp mg = fit_model_grasp(cloud, d, Vec3(0.0, 0.45, 0.8));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(mg.fit.semi_axes[i], p.semi_axes[i], 0.05 * p.semi_axes[i]) << "axis " << i;
  }
  EXPECT_LT((mg.fit.center - p.centroid).norm(), 0.005);
  // Grasp point is the fitted surface point nearest the camera: front of the fruit.
  EXPECT_GT(mg.plan.grasp_pose.position.y(), p.centroid.y());
  EXPECT_EQ(mg.plan.method, GraspMethod::ModelFit);
}
