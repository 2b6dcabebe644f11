#pragma once

#include "harvest/geometry.hpp"
#include "harvest/grasp.hpp"
#include "harvest/rng.hpp"
#include "harvest/scene.hpp"

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace harvest {

// ---------------------------------------------------------------------------
// State machine

enum class Stage { Scan, Detect, SelectGrasp, Attach, Detach, Done, Failed };

inline constexpr std::array<Stage, 5> kWorkingStages{Stage::Scan, Stage::Detect, Stage::SelectGrasp,
                                                     Stage::Attach, Stage::Detach};

struct HarvestStage {
  Stage stage = Stage::Scan;
  Stage failed_at = Stage::Scan;  // meaningful only when stage == Failed

  static HarvestStage start() { return {}; }
  static HarvestStage failed(Stage at) { return {Stage::Failed, at}; }
  bool terminal() const { return stage == Stage::Done || stage == Stage::Failed; }

  friend bool operator==(const HarvestStage& a, const HarvestStage& b) {
    return a.stage == b.stage && (a.stage != Stage::Failed || a.failed_at == b.failed_at);
  }
};

enum class Event {
  ScanComplete,
  CropFound,
  NoCrop,
  PlanReady,
  Attached,
  AttachFailedContinue,
  Detached,
  Abort,
};

inline constexpr std::array<Event, 8> kAllEvents{
    Event::ScanComplete, Event::CropFound,           Event::NoCrop,   Event::PlanReady,
    Event::Attached,     Event::AttachFailedContinue, Event::Detached, Event::Abort};

std::string to_string(Stage s);
std::string to_string(const HarvestStage& s);
std::string to_string(Event e);

/// Transition graph:
///   Scan -ScanComplete-> Detect -CropFound-> SelectGrasp -PlanReady-> Attach
///   Attach -Attached|AttachFailedContinue-> Detach -Detached-> Done
///   Detect -NoCrop-> Failed(Detect); any working stage -Abort-> Failed(stage)
/// Done and Failed are terminal. Any other pair throws IllegalTransitionError.
HarvestStage step(const HarvestStage& state, Event event);

// ---------------------------------------------------------------------------
// End-effector strategies and outcomes

struct SuctionCup {
  double cup_radius = 0.015;
  double max_normal_angle = 0.61;  // rad
  double localization_stddev = 0.01;
};

struct FourFingerGripper {
  double aperture = 0.12;
  double entanglement_radius = 0.03;
  double pivot_slip_angle = 0.35;
  double localization_stddev = 0.01;
  double max_normal_angle = 0.61;
};

using AttachStrategy = std::variant<SuctionCup, FourFingerGripper>;

struct OscillatingBlade {
  double blade_half_width = 0.01;
  double lateral_error_stddev = 0.003;
};

struct SnapPull {
  double clean_diameter = 0.006;
  double max_diameter = 0.009;
};

struct WireLoop {
  double max_gap_diameter = 0.008;
  double max_toughness = 0.7;
};

using DetachStrategy = std::variant<OscillatingBlade, SnapPull, WireLoop>;

void validate(const AttachStrategy& s);
void validate(const DetachStrategy& s);
std::string strategy_name(const AttachStrategy& s);
std::string strategy_name(const DetachStrategy& s);

enum class OutcomeReason {
  Ok,
  AngleTooSteep,
  LeafBlocked,
  Entanglement,
  PivotSlip,
  PeduncleMissed,
  PeduncleTore,
  TooTough,
  TooThick,
};

std::string to_string(OutcomeReason r);

struct AttachOutcome {
  bool success = false;
  OutcomeReason reason = OutcomeReason::AngleTooSteep;
  Vec3 localization_error = Vec3::Zero();  // shared with the detach model
  Vec3 contact_point = Vec3::Zero();
};

struct DetachOutcome {
  bool success = false;
  OutcomeReason reason = OutcomeReason::PeduncleMissed;
  bool clean_break = false;  // SnapPull only
  double lateral_offset = 0.0;  // OscillatingBlade only
};

/// Approach segment length checked for leaf interference.
inline constexpr double kApproachClearance = 0.1;

/// Draws one localization error (isotropic, the strategy's stddev) and
/// evaluates the grasp against the true scene geometry. The error is
/// recorded in the outcome for attempt_detach.
AttachOutcome attempt_attach(const AttachStrategy& strategy, const GraspPlan& plan,
                             const Scene& scene, int pepper_id, RngStream& rng);

/// `shared_error` is the localization error drawn by attempt_attach; pass
/// zero to decouple the two stages.
DetachOutcome attempt_detach(const DetachStrategy& strategy, const GraspPlan& plan,
                             const Scene& scene, int pepper_id, RngStream& rng,
                             const Vec3& shared_error);

// ---------------------------------------------------------------------------
// Attempt bookkeeping and timing

struct TimingModel {
  double scan_per_waypoint = 6.0;
  double detect = 2.5;
  double select = 2.0;
  double attach_move = 3.0;
  double detach_move = 3.0;
  double magnet_recouple = 2.5;

  void validate() const;
  static TimingModel zero() { return {0, 0, 0, 0, 0, 0}; }
};

/// Arm motion time (s) attributed to each stage.
struct StageMoves {
  double scan = 0.0;
  double attach = 0.0;
  double detach = 0.0;

  double total() const { return scan + attach + detach; }
};

struct HarvestAttempt {
  int pepper_id = 0;
  std::array<double, 5> stage_durations{};  // indexed like kWorkingStages
  std::optional<AttachOutcome> attach;
  std::optional<DetachOutcome> detach;
  double total_time = 0.0;
  std::vector<Stage> stages_visited;
  HarvestStage final_state;

  bool attached() const { return attach && attach->success; }
  bool detached() const { return detach && detach->success; }
  bool harvested() const { return attached() && detached(); }
};

/// Fills the per-stage durations of the attempt for the stages it visited
/// and returns their sum:
///   scan_per_waypoint*waypoints + detect + select + attach_move
///   + detach_move + magnet_recouple + arm moves.
double cycle_time(HarvestAttempt& attempt, const TimingModel& timing, int scan_waypoints,
                  const StageMoves& arm_moves);

inline constexpr const char* kAttemptCsvHeader =
    "pepper_id,scan_s,detect_s,select_s,attach_s,detach_s,total_s,final_state,attach_reason,"
    "detach_reason,clean_break";

std::string attempt_csv_row(const HarvestAttempt& attempt);

}  // namespace harvest
