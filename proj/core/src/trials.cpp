#include "harvest/trials.hpp"

#include "harvest/errors.hpp"
#include "harvest/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace harvest {

namespace {

constexpr std::uint64_t kSaltScene = 0x5ce4e;
constexpr std::uint64_t kSaltOutcome = 0x0c0e;
constexpr std::uint64_t kSaltRender = 0x4e4d;
constexpr std::uint64_t kSaltBench = 0xbe4c;

double z_for(double confidence) {
  const boost::math::normal_distribution<double> standard(0.0, 1.0);
  return boost::math::quantile(standard, 1.0 - 0.5 * (1.0 - confidence));
}

Pose arm_base_pose(const TrialConfig& config, const Scene& scene, const SweetPepper& target) {
  const Vec3 n = scene.trellis.normal;
  const Vec3 row = config.scene.row_direction();
  const Vec3 origin = scene.trellis.origin;
  const double along = (target.centroid - origin).dot(row);
  Pose base;
  base.position = origin + (along + config.arm_base_offset.x()) * row +
                  config.arm_base_offset.y() * n + config.arm_base_offset.z() * kWorldUp;
  const double yaw = std::atan2(-n.y(), -n.x());
  base.orientation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  return base;
}

// IK from the previous configuration, falling back to the home seed.
std::optional<JointConfig> reach(const ArmModel& arm, const Pose& target, const JointConfig& seed) {
  try {
    return solve_ik(arm, target, seed).q;
  } catch (const UnreachableError&) {
  }
  if (seed == JointConfig{}) return std::nullopt;
  try {
    return solve_ik(arm, target, JointConfig{}).q;
  } catch (const UnreachableError&) {
    return std::nullopt;
  }
}

}  // namespace

std::string to_string(Scenario s) { return s == Scenario::Modified ? "modified" : "unmodified"; }

Scenario scenario_from_string(const std::string& s) {
  if (s == "modified" || s == "Modified") return Scenario::Modified;
  if (s == "unmodified" || s == "Unmodified") return Scenario::Unmodified;
  throw ConfigError("unknown scenario '" + s + "'");
}

void TrialConfig::validate() const {
  if (pepper_count < 0) throw ConfigError("pepper_count must be non-negative");
  if (!(unmodified_leaf_density > 0.0)) {
    throw ConfigError("unmodified scenario needs a positive leaf density");
  }
  scene_for_pepper(seed).validate();
  sensor.validate();
  color.validate();
  if (!(segmentation.radius > 0.0) || segmentation.min_points < 1) {
    throw ConfigError("segmentation radius must be positive and min_points at least 1");
  }
  if (!(scan_standoff > 0.0) || scan_margin < 0.0) throw ConfigError("invalid scan geometry");
  if (scan_mode.waypoints < 1) throw ConfigError("scan mode needs at least one waypoint");
  if (peduncle_offset < 0.0) throw ConfigError("peduncle_offset must be non-negative");
  harvest::validate(attach);
  harvest::validate(detach);
  timing.validate();
}

double TrialConfig::leaf_density() const {
  return scenario == Scenario::Modified ? 0.0 : unmodified_leaf_density;
}

SceneConfig TrialConfig::scene_for_pepper(std::uint64_t pepper_seed) const {
  SceneConfig c = scene;
  c.pepper_count = 1;
  c.leaf_density = leaf_density();
  c.seed = pepper_seed;
  return c;
}

TrialConfig TrialConfig::preset(Cultivar cultivar, Scenario scenario) {
  TrialConfig c;
  c.cultivar = cultivar;
  c.scenario = scenario;
  c.scene = SceneConfig::preset(cultivar);
  switch (cultivar) {
    case Cultivar::Claire:
      c.attach = SuctionCup{0.015, 0.43, 0.015};
      c.detach = OscillatingBlade{0.026, 0.0025};
      break;
    case Cultivar::Redject:
      c.attach = SuctionCup{0.015, 0.46, 0.015};
      c.detach = OscillatingBlade{0.0084, 0.0025};
      break;
    case Cultivar::Custom:
      break;
  }
  return c;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double confidence) {
  if (n == 0) throw ArgumentError("wilson_interval needs n >= 1");
  if (successes > n) throw ArgumentError("successes exceed n");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ArgumentError("confidence must be in (0,1)");
  const double z = z_for(confidence);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::clamp(centre - half, 0.0, 1.0), std::clamp(centre + half, 0.0, 1.0)};
}

RateEstimate estimate_rate(std::size_t successes, std::size_t n, double confidence) {
  RateEstimate r;
  r.successes = successes;
  r.n = n;
  r.rate = static_cast<double>(successes) / static_cast<double>(n);
  std::tie(r.lo, r.hi) = wilson_interval(successes, n, confidence);
  return r;
}

double TrialReport::p_detach_given_attach() const {
  if (attach.successes == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(detached_given_attached) / static_cast<double>(attach.successes);
}

double TrialReport::p_detach_given_no_attach() const {
  const std::size_t failed = n - attach.successes;
  if (failed == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(detached_given_not_attached) / static_cast<double>(failed);
}

int TrialReport::dominant_stage() const {
  return static_cast<int>(std::max_element(stage_share.begin(), stage_share.end()) -
                          stage_share.begin());
}

HarvestAttempt simulate_pepper(const TrialConfig& config, std::size_t index) {
  RngStream rng = make_stream(config.seed, index, kSaltOutcome);
  const Scene scene =
      generate_scene(config.scene_for_pepper(derive_seed(config.seed, index, kSaltScene)));
  const SweetPepper& target = scene.peppers.front();
  const Vec3 n = scene.trellis.normal;

  HarvestAttempt attempt;
  attempt.pepper_id = static_cast<int>(index);
  HarvestStage state = HarvestStage::start();
  attempt.stages_visited.push_back(state.stage);
  auto advance = [&](Event e) {
    state = step(state, e);
    if (!state.terminal()) attempt.stages_visited.push_back(state.stage);
  };

  const ArmModel arm = ArmModel::generic(arm_base_pose(config, scene, target));
  StageMoves moves;
  int scan_waypoints = 0;
  auto finish = [&]() {
    attempt.final_state = state;
    cycle_time(attempt, config.timing, scan_waypoints, moves);
    return attempt;
  };

  // Scan
  const Aabb region = Aabb::around(target.centroid,
                                   target.semi_axes + Vec3::Constant(config.scan_margin));
  const std::vector<Pose> views =
      plan_scan_trajectory(region, config.scan_mode, config.scan_standoff, n, config.arc_span);
  std::vector<JointConfig> path{JointConfig{}};
  for (const Pose& view : views) {
    const auto q = reach(arm, view, path.back());
    if (!q) {
      moves.scan = trajectory_duration(arm, path);
      scan_waypoints = static_cast<int>(path.size()) - 1;
      advance(Event::Abort);
      return finish();
    }
    path.push_back(*q);
  }
  moves.scan = trajectory_duration(arm, path);
  scan_waypoints = static_cast<int>(views.size());

  ColoredPointCloud cloud;
  for (std::size_t k = 0; k < views.size(); ++k) {
    cloud.append(render_pointcloud(scene, views[k], config.sensor,
                                   derive_seed(config.seed, index, kSaltRender + k)));
  }
  advance(Event::ScanComplete);

  // Detect
  const auto detections =
      segment_clusters(cloud, detect_color(cloud, config.color), config.segmentation.radius,
                       config.segmentation.min_points);
  if (detections.empty()) {
    advance(Event::NoCrop);
    return finish();
  }
  const PepperDetection& detection = *std::min_element(
      detections.begin(), detections.end(), [&](const PepperDetection& a, const PepperDetection& b) {
        return (a.centroid - region.center()).squaredNorm() <
               (b.centroid - region.center()).squaredNorm();
      });
  advance(Event::CropFound);

  // Select grasp
  const Pose& central_view = views[views.size() / 2];
  GraspPlan plan;
  try {
    if (config.grasp_method == GraspMethod::ModelFit) {
      plan = fit_model_grasp(cloud, detection, central_view.position, config.peduncle_offset, n)
                 .plan;
    } else {
      plan = make_grasp_plan(
          rank_grasp_candidates(cloud, detection, central_view.z_axis(), config.weights, n),
          detection, config.peduncle_offset, GraspMethod::SurfaceHeuristic, n);
    }
  } catch (const Error&) {
    advance(Event::Abort);
    return finish();
  }
  advance(Event::PlanReady);

  // Attach
  const auto q_grasp = reach(arm, plan.grasp_pose, path.back());
  const auto q_cut = q_grasp ? reach(arm, plan.cut_pose, *q_grasp) : std::nullopt;
  if (!q_grasp || !q_cut) {
    advance(Event::Abort);
    return finish();
  }
  const JointConfig attach_path[] = {path.back(), *q_grasp};
  moves.attach = trajectory_duration(arm, attach_path);
  attempt.attach = attempt_attach(config.attach, plan, scene, target.id, rng);
  advance(attempt.attach->success ? Event::Attached : Event::AttachFailedContinue);

  // Detach
  const JointConfig detach_path[] = {*q_grasp, *q_cut};
  moves.detach = trajectory_duration(arm, detach_path);
  const Vec3 shared = config.shared_error ? attempt.attach->localization_error : Vec3::Zero();
  attempt.detach = attempt_detach(config.detach, plan, scene, target.id, rng, shared);
  advance(Event::Detached);
  return finish();
}

TrialReport aggregate(const TrialConfig& config, const std::vector<HarvestAttempt>& attempts) {
  if (attempts.empty()) throw EmptyTrialError("a trial needs at least one pepper");
  TrialReport r;
  r.cultivar = config.cultivar;
  r.scenario = config.scenario;
  r.seed = config.seed;
  r.n = attempts.size();

  std::size_t attached = 0, detached = 0, harvested = 0;
  double completed_time = 0.0;
  std::array<double, 5> stage_sum{};
  for (const HarvestAttempt& a : attempts) {
    attached += a.attached();
    detached += a.detached();
    harvested += a.harvested();
    if (a.detached()) {
      (a.attached() ? r.detached_given_attached : r.detached_given_not_attached) += 1;
      r.clean_breaks += a.detach->clean_break;
    }
    if (a.final_state.stage == Stage::Done) {
      ++r.completed;
      completed_time += a.total_time;
    } else {
      ++r.failures["failed." + to_string(a.final_state.failed_at)];
    }
    if (a.attach && !a.attach->success) ++r.failures["attach." + to_string(a.attach->reason)];
    if (a.detach && !a.detach->success) ++r.failures["detach." + to_string(a.detach->reason)];
    for (std::size_t s = 0; s < stage_sum.size(); ++s) stage_sum[s] += a.stage_durations[s];
  }
  r.attach = estimate_rate(attached, r.n);
  r.detach = estimate_rate(detached, r.n);
  r.combined = estimate_rate(harvested, r.n);
  r.mean_cycle_time = r.completed > 0 ? completed_time / static_cast<double>(r.completed) : 0.0;
  double total = 0.0;
  for (double s : stage_sum) total += s;
  for (std::size_t s = 0; s < stage_sum.size(); ++s) {
    r.stage_share[s] = total > 0.0 ? stage_sum[s] / total : 0.0;
  }
  return r;
}

TrialResult run_trial_detailed(const TrialConfig& config, unsigned threads) {
  config.validate();
  if (config.pepper_count == 0) throw EmptyTrialError("a trial needs at least one pepper");
  const auto count = static_cast<std::size_t>(config.pepper_count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));

  std::vector<HarvestAttempt> attempts(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        attempts[i] = simulate_pepper(config, i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  TrialResult out;
  out.report = aggregate(config, attempts);
  out.attempts = std::move(attempts);
  return out;
}

TrialReport run_trial(const TrialConfig& config, unsigned threads) {
  return run_trial_detailed(config, threads).report;
}

ReferenceEntry ReferenceTable::claire() {
  ReferenceEntry e;
  e.trial = "claire";
  e.cultivar = Cultivar::Claire;
  e.field_n = 24;
  e.attach = 0.58;
  e.detach = 0.92;
  e.combined = 0.58;
  e.unmodified_combined = 0.46;
  e.cycle_time = std::pair{34.0, 40.0};
  return e;
}

ReferenceEntry ReferenceTable::redject() {
  ReferenceEntry e;
  e.trial = "redject";
  e.cultivar = Cultivar::Redject;
  e.field_n = 26;
  e.attach = 0.81;
  e.detach = 0.42;
  e.combined = 0.42;
  return e;
}

ReferenceEntry ReferenceTable::by_name(const std::string& trial) {
  if (trial == "claire") return claire();
  if (trial == "redject") return redject();
  throw LookupError("unknown reference trial '" + trial + "'");
}

bool Comparison::all_pass() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const MetricCheck& c) { return c.pass; });
}

std::string Comparison::summary() const {
  std::ostringstream os;
  for (const MetricCheck& c : checks) {
    os << (c.pass ? "PASS " : "FAIL ") << c.metric << " simulated=" << format_real(c.simulated);
    if (c.reference_lo == c.reference_hi) {
      os << " reference=" << format_real(c.reference_lo) << " tolerance=" << format_real(c.tolerance);
    } else {
      os << " reference=[" << format_real(c.reference_lo) << ", " << format_real(c.reference_hi)
         << "]";
    }
    os << '\n';
  }
  os << (all_pass() ? "all metrics pass" : "some metrics fail") << '\n';
  return os.str();
}

Comparison compare_to_reference(const TrialReport& report, const ReferenceEntry& reference,
                                const CompareTolerances& tolerances) {
  if (report.cultivar != reference.cultivar) {
    throw ComparisonError("report is for " + to_string(report.cultivar) + " but reference is " +
                          reference.trial);
  }
  Comparison out;
  auto rate = [&](const std::string& name, double sim, double ref, double tol) {
    out.checks.push_back({name, sim, ref, ref, tol, std::abs(sim - ref) <= tol + 1e-12});
  };
  if (report.scenario == Scenario::Modified) {
    rate("attach_rate", report.attach.rate, reference.attach, tolerances.attach);
    rate("detach_rate", report.detach.rate, reference.detach, tolerances.detach);
    rate("combined_rate", report.combined.rate, reference.combined, tolerances.combined);
    if (reference.cycle_time) {
      const auto [lo, hi] = *reference.cycle_time;
      const double t = report.mean_cycle_time;
      out.checks.push_back({"mean_cycle_time", t, lo, hi, 0.0, t >= lo && t <= hi});
    }
  } else {
    if (!reference.unmodified_combined) {
      throw ComparisonError("reference " + reference.trial + " has no unmodified result");
    }
    rate("combined_rate", report.combined.rate, *reference.unmodified_combined,
         tolerances.combined);
  }
  return out;
}

NormalDist snap_pull_diameter_distribution(const SnapPull& tool, const SnapPullReference& ref) {
  const boost::math::normal_distribution<double> standard(0.0, 1.0);
  const double p_clean = static_cast<double>(ref.clean) / static_cast<double>(ref.tested);
  const double p_removed = static_cast<double>(ref.removed) / static_cast<double>(ref.tested);
  const double z_clean = boost::math::quantile(standard, p_clean);
  const double z_removed = boost::math::quantile(standard, p_removed);
  const double sigma = (std::log(tool.max_diameter) - std::log(tool.clean_diameter)) /
                       (z_removed - z_clean);
  const double mu = std::log(tool.clean_diameter) - sigma * z_clean;
  const double mean = std::exp(mu + 0.5 * sigma * sigma);
  const double stddev = mean * std::sqrt(std::expm1(sigma * sigma));
  return {mean, stddev};
}

SnapPullReport run_snap_pull_bench(std::size_t n, std::uint64_t seed, const SnapPull& tool,
                                   const NormalDist& diameter) {
  if (n == 0) throw EmptyTrialError("the bench needs at least one peduncle");
  validate(DetachStrategy{tool});
  RngStream rng = make_stream(seed, 0, kSaltBench);
  SweetPepper pepper;
  pepper.semi_axes = Vec3::Constant(0.04);
  pepper.peduncle.axis = kWorldUp;
  pepper.peduncle.length = 0.05;
  Scene scene;
  scene.trellis = {Vec3::Zero(), Vec3::UnitY(), kTrellisColor};
  scene.peppers.push_back(pepper);

  SnapPullReport r;
  r.n = n;
  const GraspPlan plan;
  for (std::size_t i = 0; i < n; ++i) {
    scene.peppers.front().peduncle.diameter = sample_lognormal(diameter, rng);
    const DetachOutcome o = attempt_detach(tool, plan, scene, 0, rng, Vec3::Zero());
    if (o.success) {
      ++r.removed;
      (o.clean_break ? r.clean : r.torn) += 1;
    }
  }
  r.removal = estimate_rate(r.removed, n);
  if (r.removed > 0) r.clean_fraction = estimate_rate(r.clean, r.removed);
  return r;
}

}  // namespace harvest
