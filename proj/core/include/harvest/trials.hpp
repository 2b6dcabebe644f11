#pragma once

#include "harvest/arm.hpp"
#include "harvest/grasp.hpp"
#include "harvest/harvest_fsm.hpp"
#include "harvest/kv_text.hpp"
#include "harvest/perception.hpp"
#include "harvest/scene.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace harvest {

enum class Scenario { Modified, Unmodified };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

inline constexpr double kUnmodifiedLeafDensity = 2.0;

struct TrialConfig {
  Cultivar cultivar = Cultivar::Claire;
  Scenario scenario = Scenario::Modified;
  double unmodified_leaf_density = kUnmodifiedLeafDensity;
  int pepper_count = 100;
  std::uint64_t seed = 0;

  SceneConfig scene;  // per-pepper context; pepper_count and leaf_density are overridden
  SensorModel sensor{.horizontal_rays = 48, .vertical_rays = 36};
  ColorModel color = ColorModel::ripe_red();
  SegmentationParams segmentation;
  GraspWeights weights;
  GraspMethod grasp_method = GraspMethod::SurfaceHeuristic;
  double peduncle_offset = kDefaultPeduncleOffset;

  ScanMode scan_mode = ScanMode::arc(3);
  double scan_standoff = 0.35;
  double scan_margin = 0.10;  // region padding around the target, m
  double arc_span = kDefaultArcSpan;
  Vec3 arm_base_offset{0.0, 0.85, 0.45};  // from the target's row position on the trellis

  AttachStrategy attach = SuctionCup{};
  DetachStrategy detach = OscillatingBlade{};
  bool shared_error = true;
  TimingModel timing;

  void validate() const;
  double leaf_density() const;
  /// Scene parameters for one pepper's context.
  SceneConfig scene_for_pepper(std::uint64_t pepper_seed) const;

  static TrialConfig preset(Cultivar cultivar, Scenario scenario = Scenario::Modified);
};

struct RateEstimate {
  std::size_t successes = 0;
  std::size_t n = 0;
  double rate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval. Throws ArgumentError unless 0 <= k <= n, n >= 1
/// and 0 < confidence < 1.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n,
                                          double confidence = 0.95);
RateEstimate estimate_rate(std::size_t successes, std::size_t n, double confidence = 0.95);

struct TrialReport {
  Cultivar cultivar = Cultivar::Claire;
  Scenario scenario = Scenario::Modified;
  std::uint64_t seed = 0;
  std::size_t n = 0;

  RateEstimate attach;
  RateEstimate detach;
  RateEstimate combined;
  std::size_t detached_given_attached = 0;
  std::size_t detached_given_not_attached = 0;
  std::size_t clean_breaks = 0;

  std::size_t completed = 0;  // attempts that reached Done
  double mean_cycle_time = 0.0;  // over completed attempts
  std::array<double, 5> stage_share{};  // indexed like kWorkingStages
  std::map<std::string, std::size_t> failures;

  /// NaN when the conditioning set is empty.
  double p_detach_given_attach() const;
  double p_detach_given_no_attach() const;
  int dominant_stage() const;  // index of the largest stage share
};

struct TrialResult {
  TrialReport report;
  std::vector<HarvestAttempt> attempts;
};

/// Simulates one pepper end to end: context scene, scan, render, detect,
/// segment, plan, attach, detach. Pure function of (config, index).
HarvestAttempt simulate_pepper(const TrialConfig& config, std::size_t index);

/// Folds attempts in order into a report.
TrialReport aggregate(const TrialConfig& config, const std::vector<HarvestAttempt>& attempts);

/// threads = 0 uses the hardware concurrency; the report does not depend
/// on it. Throws EmptyTrialError for pepper_count 0.
TrialResult run_trial_detailed(const TrialConfig& config, unsigned threads = 0);
TrialReport run_trial(const TrialConfig& config, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Reference results

struct ReferenceEntry {
  std::string trial;  // "claire" or "redject"
  Cultivar cultivar = Cultivar::Claire;
  std::size_t field_n = 0;
  double attach = 0.0;
  double detach = 0.0;
  double combined = 0.0;
  std::optional<double> unmodified_combined;
  std::optional<std::pair<double, double>> cycle_time;  // seconds
};

struct SnapPullReference {
  std::size_t tested = 22;
  std::size_t removed = 17;
  std::size_t clean = 14;
  std::size_t torn = 3;

  double removal_rate() const { return static_cast<double>(removed) / tested; }
  double clean_fraction() const { return static_cast<double>(clean) / removed; }
};

struct ReferenceTable {
  static ReferenceEntry claire();
  static ReferenceEntry redject();
  static ReferenceEntry by_name(const std::string& trial);  // LookupError if unknown
  static SnapPullReference snap_pull() { return {}; }
};

struct CompareTolerances {
  double attach = 0.03;
  double detach = 0.03;
  double combined = 0.03;

  static CompareTolerances uniform(double t) { return {t, t, t}; }
};

struct MetricCheck {
  std::string metric;
  double simulated = 0.0;
  double reference_lo = 0.0;
  double reference_hi = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Comparison {
  std::vector<MetricCheck> checks;
  bool all_pass() const;
  std::string summary() const;
};

/// Modified reports compare attach/detach/combined and, when the entry has
/// one, mean cycle time against its interval. Unmodified reports compare
/// combined against the unmodified cell. Throws ComparisonError when the
/// cultivar differs or the entry has no cell for the scenario.
Comparison compare_to_reference(const TrialReport& report, const ReferenceEntry& reference,
                                const CompareTolerances& tolerances = {});

// ---------------------------------------------------------------------------
// Snap-pull bench

/// Log-normal peduncle diameter distribution (metres) whose CDF passes
/// through clean/tested at clean_diameter and removed/tested at max_diameter.
NormalDist snap_pull_diameter_distribution(const SnapPull& tool = {},
                                           const SnapPullReference& ref = {});

struct SnapPullReport {
  std::size_t n = 0;
  std::size_t removed = 0;
  std::size_t clean = 0;
  std::size_t torn = 0;
  RateEstimate removal;
  RateEstimate clean_fraction;  // among removals
};

SnapPullReport run_snap_pull_bench(std::size_t n, std::uint64_t seed, const SnapPull& tool = {},
                                   const NormalDist& diameter = snap_pull_diameter_distribution());

// ---------------------------------------------------------------------------
// Serialization

KvDocument trial_report_to_kv(const TrialReport& report);
TrialReport trial_report_from_kv(const KvDocument& doc);
KvDocument snap_pull_report_to_kv(const SnapPullReport& report);

KvDocument trial_config_to_kv(const TrialConfig& config);
/// Starts from TrialConfig::preset(cultivar, scenario) and overrides any
/// key present.
TrialConfig trial_config_from_kv(const KvDocument& doc);

std::string attempts_to_csv(const std::vector<HarvestAttempt>& attempts);

}  // namespace harvest
