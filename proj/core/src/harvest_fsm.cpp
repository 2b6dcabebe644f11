#include "harvest/harvest_fsm.hpp"

#include "harvest/errors.hpp"

#include <cstdio>

namespace harvest {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Scan:
      return "Scan";
    case Stage::Detect:
      return "Detect";
    case Stage::SelectGrasp:
      return "SelectGrasp";
    case Stage::Attach:
      return "Attach";
    case Stage::Detach:
      return "Detach";
    case Stage::Done:
      return "Done";
    case Stage::Failed:
      return "Failed";
  }
  return "Unknown";
}

std::string to_string(const HarvestStage& s) {
  if (s.stage == Stage::Failed) return "Failed(" + to_string(s.failed_at) + ")";
  return to_string(s.stage);
}

std::string to_string(Event e) {
  switch (e) {
    case Event::ScanComplete:
      return "ScanComplete";
    case Event::CropFound:
      return "CropFound";
    case Event::NoCrop:
      return "NoCrop";
    case Event::PlanReady:
      return "PlanReady";
    case Event::Attached:
      return "Attached";
    case Event::AttachFailedContinue:
      return "AttachFailedContinue";
    case Event::Detached:
      return "Detached";
    case Event::Abort:
      return "Abort";
  }
  return "Unknown";
}

HarvestStage step(const HarvestStage& state, Event event) {
  const Stage s = state.stage;
  if (!state.terminal() && event == Event::Abort) return HarvestStage::failed(s);
  switch (s) {
    case Stage::Scan:
      if (event == Event::ScanComplete) return {Stage::Detect};
      break;
    case Stage::Detect:
      if (event == Event::CropFound) return {Stage::SelectGrasp};
      if (event == Event::NoCrop) return HarvestStage::failed(Stage::Detect);
      break;
    case Stage::SelectGrasp:
      if (event == Event::PlanReady) return {Stage::Attach};
      break;
    case Stage::Attach:
      if (event == Event::Attached || event == Event::AttachFailedContinue) return {Stage::Detach};
      break;
    case Stage::Detach:
      if (event == Event::Detached) return {Stage::Done};
      break;
    case Stage::Done:
    case Stage::Failed:
      break;
  }
  throw IllegalTransitionError("no transition from " + to_string(state) + " on " + to_string(event));
}

void TimingModel::validate() const {
  for (double v : {scan_per_waypoint, detect, select, attach_move, detach_move, magnet_recouple}) {
    if (!(v >= 0.0)) throw ConfigError("timing values must be non-negative");
  }
}

double cycle_time(HarvestAttempt& attempt, const TimingModel& timing, int scan_waypoints,
                  const StageMoves& arm_moves) {
  timing.validate();
  if (scan_waypoints < 0) throw ArgumentError("scan_waypoints must be non-negative");
  auto visited = [&](Stage s) {
    for (Stage v : attempt.stages_visited) {
      if (v == s) return true;
    }
    return false;
  };
  auto& d = attempt.stage_durations;
  d.fill(0.0);
  if (visited(Stage::Scan)) d[0] = timing.scan_per_waypoint * scan_waypoints + arm_moves.scan;
  if (visited(Stage::Detect)) d[1] = timing.detect;
  if (visited(Stage::SelectGrasp)) d[2] = timing.select;
  if (visited(Stage::Attach)) d[3] = timing.attach_move + arm_moves.attach;
  if (visited(Stage::Detach)) d[4] = timing.detach_move + timing.magnet_recouple + arm_moves.detach;
  attempt.total_time = d[0] + d[1] + d[2] + d[3] + d[4];
  return attempt.total_time;
}

std::string attempt_csv_row(const HarvestAttempt& a) {
  char nums[256];
  std::snprintf(nums, sizeof nums, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", a.pepper_id,
                a.stage_durations[0], a.stage_durations[1], a.stage_durations[2],
                a.stage_durations[3], a.stage_durations[4], a.total_time);
  std::string row = nums;
  row += ',' + to_string(a.final_state);
  row += ',' + (a.attach ? to_string(a.attach->reason) : std::string("-"));
  row += ',' + (a.detach ? to_string(a.detach->reason) : std::string("-"));
  row += ',';
  row += a.detach && a.detach->clean_break ? "1" : "0";
  return row;
}

}  // namespace harvest
