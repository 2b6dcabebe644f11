#include "harvest/errors.hpp"
#include "harvest/harvest_fsm.hpp"
#include "harvest/trials.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

using namespace harvest;
using harvest::testing::round_leaf;
using harvest::testing::single_pepper_scene;

namespace {

constexpr double kPi = std::numbers::pi;

// The declared graph, written out as a table.
std::optional<HarvestStage> declared(const HarvestStage& s, Event e) {
  if (s.terminal()) return std::nullopt;
  if (e == Event::Abort) return HarvestStage::failed(s.stage);
  const std::map<std::pair<Stage, Event>, HarvestStage> table{
      {{Stage::Scan, Event::ScanComplete}, {Stage::Detect}},
      {{Stage::Detect, Event::CropFound}, {Stage::SelectGrasp}},
      {{Stage::Detect, Event::NoCrop}, HarvestStage::failed(Stage::Detect)},
      {{Stage::SelectGrasp, Event::PlanReady}, {Stage::Attach}},
      {{Stage::Attach, Event::Attached}, {Stage::Detach}},
      {{Stage::Attach, Event::AttachFailedContinue}, {Stage::Detach}},
      {{Stage::Detach, Event::Detached}, {Stage::Done}},
  };
  auto it = table.find({s.stage, e});
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::vector<HarvestStage> all_states() {
  std::vector<HarvestStage> v;
  for (Stage s : kWorkingStages) v.push_back({s});
  v.push_back({Stage::Done});
  for (Stage s : kWorkingStages) v.push_back(HarvestStage::failed(s));
  return v;
}

// Plan whose grasp sits on the front of the pepper and whose blade sits on
// the true peduncle axis `cut_height` above the attach point.
GraspPlan truth_plan(const SweetPepper& p, double cut_height = 0.03) {
  GraspPlan plan;
  const Vec3 front = p.centroid + Vec3(0.0, p.semi_axes.y(), 0.0);
  plan.grasp_pose = pose_from_forward(front, -Vec3::UnitY());
  plan.cut_pose = pose_from_forward(p.peduncle.point_at_height(cut_height), -Vec3::UnitY());
  return plan;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(Fsm, NominalSequenceVisitsFiveStagesOnce) {
  HarvestStage s = HarvestStage::start();
  std::vector<Stage> visited{s.stage};
  for (Event e : {Event::ScanComplete, Event::CropFound, Event::PlanReady, Event::Attached, Event::Detached}) {
    s = step(s, e);
    if (!s.terminal()) visited.push_back(s.stage);
  }
  EXPECT_EQ(s.stage, Stage::Done);
  EXPECT_EQ(visited, std::vector<Stage>(kWorkingStages.begin(), kWorkingStages.end()));
}

TEST(Fsm, AbortAndIllegalEvents) {
  EXPECT_EQ(step({Stage::Attach}, Event::Abort), HarvestStage::failed(Stage::Attach));
  EXPECT_EQ(step({Stage::Detect}, Event::NoCrop), HarvestStage::failed(Stage::Detect));
  EXPECT_EQ(step({Stage::Attach}, Event::AttachFailedContinue), HarvestStage{Stage::Detach});
  EXPECT_THROW(step({Stage::Scan}, Event::Detached), IllegalTransitionError);
  EXPECT_THROW(step({Stage::Done}, Event::Abort), IllegalTransitionError);
  EXPECT_EQ(to_string(HarvestStage::failed(Stage::Attach)), "Failed(Attach)");
}

TEST(Fsm, EveryStateEventPairMatchesDeclaredGraph) {
  for (const HarvestStage& s : all_states()) {
    for (Event e : kAllEvents) {
      const auto want = declared(s, e);
      if (want) {
        EXPECT_EQ(step(s, e), *want) << to_string(s) << " + " << to_string(e);
      } else {
        EXPECT_THROW(step(s, e), IllegalTransitionError) << to_string(s) << " + " << to_string(e);
      }
    }
  }
}

TEST(Fsm, RandomEventFuzzingStaysInDeclaredStates) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> pick(0, kAllEvents.size() - 1);
  const auto states = all_states();
  for (int run = 0; run < 2000; ++run) {
    HarvestStage s = HarvestStage::start();
    for (int k = 0; k < 20 && !s.terminal(); ++k) {
      const Event e = kAllEvents[pick(rng)];
      try {
        const HarvestStage next = step(s, e);
        ASSERT_TRUE(std::find(states.begin(), states.end(), next) != states.end());
        ASSERT_EQ(next, *declared(s, e));
        s = next;
      } catch (const IllegalTransitionError&) {
        ASSERT_FALSE(declared(s, e).has_value());
      }
    }
  }
}

TEST(Attach, PerfectPlanSucceeds) {
  const Scene s = single_pepper_scene();
  RngStream rng(1);
  const AttachOutcome o = attempt_attach(SuctionCup{0.015, 0.61, 0.0}, truth_plan(s.peppers[0]), s, 0, rng);
  EXPECT_TRUE(o.success);
  EXPECT_EQ(o.reason, OutcomeReason::Ok);
}

TEST(Attach, SixtyDegreeApproachIsTooSteep) {
  Scene s = single_pepper_scene({0.0, 0.1, 0.8}, Vec3::Constant(0.04));
  const SweetPepper& p = s.peppers[0];
  const double tilt = 60.0 * kPi / 180.0;
  GraspPlan plan = truth_plan(p);
  const Vec3 front = p.centroid + Vec3(0.0, 0.04, 0.0);
  plan.grasp_pose = pose_from_forward(front, Vec3(std::sin(tilt), -std::cos(tilt), 0.0));
  RngStream rng(1);
  const AttachOutcome o = attempt_attach(SuctionCup{0.015, 35.0 * kPi / 180.0, 1e-9}, plan, s, 0, rng);
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.reason, OutcomeReason::AngleTooSteep);
  RngStream rng2(1);
  EXPECT_TRUE(attempt_attach(SuctionCup{0.015, 65.0 * kPi / 180.0, 1e-9}, plan, s, 0, rng2).success);
}

TEST(Attach, LeafInFinalApproachBlocks) {
  Scene s = single_pepper_scene();
  s.leaves.push_back(round_leaf({0.0, 0.18, 0.8}, 0.03));
  RngStream rng(1);
  const AttachOutcome o = attempt_attach(SuctionCup{0.015, 0.61, 1e-9}, truth_plan(s.peppers[0]), s, 0, rng);
  EXPECT_EQ(o.reason, OutcomeReason::LeafBlocked);
  // Beyond the clearance it no longer matters.
  s.leaves[0].center.y() = 0.30;
  RngStream rng2(1);
  EXPECT_TRUE(attempt_attach(SuctionCup{0.015, 0.61, 1e-9}, truth_plan(s.peppers[0]), s, 0, rng2).success);
}

TEST(Attach, FourFingerEntanglementAndPivotSlip) {
  Scene s = single_pepper_scene();
  const GraspPlan plan = truth_plan(s.peppers[0]);
  const FourFingerGripper g{0.12, 0.03, 0.35, 1e-9, 0.61};
  RngStream rng(1);
  EXPECT_TRUE(attempt_attach(g, plan, s, 0, rng).success);

  Scene leafy = s;
  leafy.leaves.push_back(round_leaf({0.025, 0.14, 0.8}, 0.01, Vec3::UnitX()));
  RngStream rng2(1);
  EXPECT_EQ(attempt_attach(g, plan, leafy, 0, rng2).reason, OutcomeReason::Entanglement);

  // Grasp from well above the mid-plane.
  GraspPlan high = plan;
  const SweetPepper& p = s.peppers[0];
  const Vec3 n = Vec3(0.0, 1.0, 1.2).normalized();
  const Vec3 on_top = p.centroid + Vec3(0.0, p.semi_axes.y() * 0.6, p.semi_axes.z() * 0.8);
  high.grasp_pose = pose_from_forward(on_top, -n);
  FourFingerGripper loose = g;
  loose.max_normal_angle = 1.5;
  RngStream rng3(1);
  EXPECT_EQ(attempt_attach(loose, high, s, 0, rng3).reason, OutcomeReason::PivotSlip);

  FourFingerGripper narrow = g;
  narrow.aperture = 0.05;
  RngStream rng4(1);
  EXPECT_EQ(attempt_attach(narrow, plan, s, 0, rng4).reason, OutcomeReason::PivotSlip);
}

TEST(Detach, BladeOnAxisSucceedsAndTwoCentimetresMisses) {
  const Scene s = single_pepper_scene();
  GraspPlan plan = truth_plan(s.peppers[0]);
  const OscillatingBlade blade{0.01, 1e-12};
  RngStream rng(3);
  const DetachOutcome ok = attempt_detach(blade, plan, s, 0, rng, Vec3::Zero());
  EXPECT_TRUE(ok.success);
  EXPECT_NEAR(ok.lateral_offset, 0.0, 1e-9);
  plan.cut_pose.position += 0.02 * plan.cut_pose.x_axis();
  const DetachOutcome miss = attempt_detach(blade, plan, s, 0, rng, Vec3::Zero());
  EXPECT_FALSE(miss.success);
  EXPECT_EQ(miss.reason, OutcomeReason::PeduncleMissed);
  EXPECT_NEAR(std::abs(miss.lateral_offset), 0.02, 1e-9);
}

TEST(Detach, BladeSuccessMatchesNormalCdf) {
  // half_width / sigma = 1.75 gives 2 Phi(1.75) - 1, close to 0.92.
  const double closed_form = 2.0 * normal_cdf(1.75) - 1.0;
  EXPECT_NEAR(closed_form, 0.92, 0.001);
  const Scene s = single_pepper_scene();
  const GraspPlan plan = truth_plan(s.peppers[0]);
  const double sigma = 0.004;
  const OscillatingBlade blade{1.75 * sigma, sigma};
  RngStream rng(2024);
  const int n = 200000;
  int ok = 0;
  for (int i = 0; i < n; ++i) ok += attempt_detach(blade, plan, s, 0, rng, Vec3::Zero()).success;
  // Five binomial standard errors.
  EXPECT_NEAR(static_cast<double>(ok) / n, closed_form, 5.0 * std::sqrt(0.08 * 0.92 / n));
}

TEST(Detach, SnapPullAndWireLoopThresholds) {
  Scene s = single_pepper_scene();
  const GraspPlan plan = truth_plan(s.peppers[0]);
  RngStream rng(1);
  auto with = [&](double diameter, double toughness) {
    s.peppers[0].peduncle.diameter = diameter;
    s.peppers[0].peduncle.toughness = toughness;
    return s;
  };
  const SnapPull pull;
  DetachOutcome o = attempt_detach(pull, plan, with(0.005, 0.4), 0, rng, Vec3::Zero());
  EXPECT_TRUE(o.success && o.clean_break);
  o = attempt_detach(pull, plan, with(0.008, 0.4), 0, rng, Vec3::Zero());
  EXPECT_TRUE(o.success);
  EXPECT_FALSE(o.clean_break);
  o = attempt_detach(pull, plan, with(0.010, 0.4), 0, rng, Vec3::Zero());
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.reason, OutcomeReason::PeduncleTore);

  const WireLoop wire;
  EXPECT_EQ(attempt_detach(wire, plan, with(0.009, 0.1), 0, rng, Vec3::Zero()).reason, OutcomeReason::TooThick);
  EXPECT_EQ(attempt_detach(wire, plan, with(0.006, 0.9), 0, rng, Vec3::Zero()).reason, OutcomeReason::TooTough);
  EXPECT_TRUE(attempt_detach(wire, plan, with(0.006, 0.3), 0, rng, Vec3::Zero()).success);
}

TEST(Outcomes, SuccessIffReasonOkOverRandomParameters) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    SceneConfig cfg = SceneConfig::preset(Cultivar::Claire);
    cfg.pepper_count = 3;
    cfg.leaf_density = 3.0 * u(rng);
    cfg.seed = trial;
    const Scene s = generate_scene(cfg);
    const SweetPepper& p = s.peppers[0];
    GraspPlan plan = truth_plan(p, 0.05 * u(rng));
    plan.cut_pose.position += Vec3(0.02 * (u(rng) - 0.5), 0.0, 0.0);
    const AttachStrategy attach = (trial % 2) ? AttachStrategy{SuctionCup{0.015, 1.2 * u(rng) + 0.05, 0.03 * u(rng) + 1e-4}}
                                              : AttachStrategy{FourFingerGripper{0.08 + 0.1 * u(rng), 0.05 * u(rng) + 1e-3, 0.6 * u(rng) + 0.05, 0.03 * u(rng) + 1e-4, 1.2 * u(rng) + 0.05}};
    const DetachStrategy detach = (trial % 3 == 0)   ? DetachStrategy{OscillatingBlade{0.02 * u(rng) + 1e-3, 0.01 * u(rng) + 1e-4}}
                                  : (trial % 3 == 1) ? DetachStrategy{SnapPull{0.004 + 0.003 * u(rng), 0.0075 + 0.003 * u(rng)}}
                                                     : DetachStrategy{WireLoop{0.004 + 0.006 * u(rng), u(rng)}};
    RngStream stream(trial);
    const AttachOutcome a = attempt_attach(attach, plan, s, p.id, stream);
    const DetachOutcome d = attempt_detach(detach, plan, s, p.id, stream, a.localization_error);
    EXPECT_EQ(a.success, a.reason == OutcomeReason::Ok);
    EXPECT_EQ(d.success, d.reason == OutcomeReason::Ok);
    if (d.clean_break) EXPECT_TRUE(d.success);
  }
}

TEST(Outcomes, SharedErrorCorrelatesAttachAndDetach) {
  const TrialConfig preset = TrialConfig::preset(Cultivar::Claire);
  const Scene s = single_pepper_scene();
  const GraspPlan plan = truth_plan(s.peppers[0]);
  std::size_t a_n = 0, a_d = 0, na_n = 0, na_d = 0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    RngStream stream = make_stream(77, i);
    const AttachOutcome a = attempt_attach(preset.attach, plan, s, 0, stream);
    const DetachOutcome d = attempt_detach(preset.detach, plan, s, 0, stream, a.localization_error);
    (a.success ? a_n : na_n)++;
    (a.success ? a_d : na_d) += d.success;
  }
  ASSERT_GT(a_n, 0u);
  ASSERT_GT(na_n, 0u);
  EXPECT_GE(static_cast<double>(a_d) / a_n, static_cast<double>(na_d) / na_n);
}

TEST(Outcomes, SameStreamSameOutcome) {
  const TrialConfig preset = TrialConfig::preset(Cultivar::Redject);
  const Scene s = single_pepper_scene();
  const GraspPlan plan = truth_plan(s.peppers[0]);
  for (std::uint64_t i = 0; i < 50; ++i) {
    RngStream x = make_stream(3, i), y = make_stream(3, i);
    const AttachOutcome a = attempt_attach(preset.attach, plan, s, 0, x);
    const AttachOutcome b = attempt_attach(preset.attach, plan, s, 0, y);
    EXPECT_EQ(a.localization_error, b.localization_error);
    EXPECT_EQ(a.reason, b.reason);
    EXPECT_EQ(attempt_detach(preset.detach, plan, s, 0, x, a.localization_error).lateral_offset,
              attempt_detach(preset.detach, plan, s, 0, y, b.localization_error).lateral_offset);
  }
}

TEST(Outcomes, InvalidStrategiesRejected) {
  EXPECT_THROW(validate(AttachStrategy{SuctionCup{0.015, -0.1, 0.01}}), ConfigError);
  EXPECT_THROW(validate(DetachStrategy{SnapPull{0.009, 0.006}}), ConfigError);
  EXPECT_THROW(validate(DetachStrategy{WireLoop{0.0, 0.5}}), ConfigError);
  EXPECT_NO_THROW(validate(DetachStrategy{OscillatingBlade{}}));
  EXPECT_EQ(strategy_name(DetachStrategy{WireLoop{}}), "wire_loop");
}

TEST(CycleTime, ZeroModelIsZero) {
  HarvestAttempt a;
  a.stages_visited.assign(kWorkingStages.begin(), kWorkingStages.end());
  EXPECT_EQ(cycle_time(a, TimingModel::zero(), 3, {}), 0.0);
  EXPECT_EQ(a.total_time, 0.0);
}

TEST(CycleTime, DefaultPresetArcThreeInRangeWithScanDominant) {
  HarvestAttempt a;
  a.stages_visited.assign(kWorkingStages.begin(), kWorkingStages.end());
  const TimingModel t;
  const StageMoves moves{2.0, 1.0, 1.5};
  const double total = cycle_time(a, t, 3, moves);
  const double expected = 3 * t.scan_per_waypoint + t.detect + t.select + t.attach_move +
                          t.detach_move + t.magnet_recouple + moves.total();
  EXPECT_DOUBLE_EQ(total, expected);
  EXPECT_GE(total, 34.0);
  EXPECT_LE(total, 40.0);
  const auto& d = a.stage_durations;
  EXPECT_EQ(std::max_element(d.begin(), d.end()) - d.begin(), 0);
  double sum = 0.0;
  for (double x : d) sum += x;
  EXPECT_DOUBLE_EQ(sum, a.total_time);
}

TEST(CycleTime, OnlyVisitedStagesAreCharged) {
  HarvestAttempt a;
  a.stages_visited = {Stage::Scan, Stage::Detect};
  const double total = cycle_time(a, TimingModel{}, 3, {1.0, 5.0, 5.0});
  EXPECT_DOUBLE_EQ(total, 3 * 6.0 + 1.0 + 2.5);
  EXPECT_EQ(a.stage_durations[3], 0.0);
  TimingModel bad;
  bad.detect = -1.0;
  EXPECT_ANY_THROW(cycle_time(a, bad, 3, {}));
}

TEST(AttemptCsv, RowMatchesHeaderColumns) {
  HarvestAttempt a;
  a.pepper_id = 12;
  a.stages_visited.assign(kWorkingStages.begin(), kWorkingStages.end());
  cycle_time(a, TimingModel{}, 3, {});
  a.attach = AttachOutcome{true, OutcomeReason::Ok};
  a.detach = DetachOutcome{false, OutcomeReason::PeduncleMissed};
  a.final_state = {Stage::Done};
  const std::string row = attempt_csv_row(a);
  EXPECT_EQ(row, "12,18.000000,2.500000,2.000000,3.000000,5.500000,31.000000,Done,Ok,PeduncleMissed,0");
  auto columns = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
  EXPECT_EQ(columns(row), columns(kAttemptCsvHeader));
  HarvestAttempt failed;
  failed.final_state = HarvestStage::failed(Stage::Detect);
  EXPECT_NE(attempt_csv_row(failed).find("Failed(Detect),-,-,0"), std::string::npos);
}
