#include "harvest/errors.hpp"
#include "harvest/scene_io.hpp"
#include "harvest/trials.hpp"

#include <sstream>

namespace harvest {

namespace {

constexpr const char* kReportFormat = "harvest-report/1";
constexpr const char* kStageKeys[] = {"scan", "detect", "select", "attach", "detach"};

void put_rate(KvDocument& doc, const std::string& p, const RateEstimate& r) {
  doc.set(p + ".successes", static_cast<std::uint64_t>(r.successes));
  doc.set(p + ".n", static_cast<std::uint64_t>(r.n));
  doc.set(p + ".rate", r.rate);
  doc.set(p + ".lo", r.lo);
  doc.set(p + ".hi", r.hi);
}

RateEstimate get_rate(const KvDocument& doc, const std::string& p) {
  RateEstimate r;
  r.successes = doc.get_uint(p + ".successes");
  r.n = doc.get_uint(p + ".n");
  r.rate = doc.get_double(p + ".rate");
  r.lo = doc.get_double(p + ".lo");
  r.hi = doc.get_double(p + ".hi");
  return r;
}

void override(const KvDocument& doc, const std::string& key, double& v) {
  v = doc.get_double(key, v);
}

}  // namespace

KvDocument trial_report_to_kv(const TrialReport& r) {
  KvDocument doc;
  doc.set("format", kReportFormat);
  doc.set("cultivar", to_string(r.cultivar));
  doc.set("scenario", to_string(r.scenario));
  doc.set("seed", r.seed);
  doc.set("n", static_cast<std::uint64_t>(r.n));
  put_rate(doc, "attach", r.attach);
  put_rate(doc, "detach", r.detach);
  put_rate(doc, "combined", r.combined);
  doc.set("detached_given_attached", static_cast<std::uint64_t>(r.detached_given_attached));
  doc.set("detached_given_not_attached", static_cast<std::uint64_t>(r.detached_given_not_attached));
  doc.set("clean_breaks", static_cast<std::uint64_t>(r.clean_breaks));
  doc.set("completed", static_cast<std::uint64_t>(r.completed));
  doc.set("mean_cycle_time", r.mean_cycle_time);
  for (std::size_t s = 0; s < r.stage_share.size(); ++s) {
    doc.set(std::string("stage_share.") + kStageKeys[s], r.stage_share[s]);
  }
  doc.set("failure.count", static_cast<std::uint64_t>(r.failures.size()));
  std::size_t k = 0;
  for (const auto& [reason, count] : r.failures) {
    const std::string p = "failure." + std::to_string(k++);
    doc.set(p + ".reason", reason);
    doc.set(p + ".count", static_cast<std::uint64_t>(count));
  }
  return doc;
}

TrialReport trial_report_from_kv(const KvDocument& doc) {
  if (doc.get("format", "") != kReportFormat) throw ParseError("not a trial report");
  TrialReport r;
  r.cultivar = cultivar_from_string(doc.get("cultivar"));
  r.scenario = scenario_from_string(doc.get("scenario"));
  r.seed = doc.get_uint("seed");
  r.n = doc.get_uint("n");
  r.attach = get_rate(doc, "attach");
  r.detach = get_rate(doc, "detach");
  r.combined = get_rate(doc, "combined");
  r.detached_given_attached = doc.get_uint("detached_given_attached");
  r.detached_given_not_attached = doc.get_uint("detached_given_not_attached");
  r.clean_breaks = doc.get_uint("clean_breaks");
  r.completed = doc.get_uint("completed");
  r.mean_cycle_time = doc.get_double("mean_cycle_time");
  for (std::size_t s = 0; s < r.stage_share.size(); ++s) {
    r.stage_share[s] = doc.get_double(std::string("stage_share.") + kStageKeys[s]);
  }
  const auto failures = doc.get_uint("failure.count");
  for (std::uint64_t k = 0; k < failures; ++k) {
    const std::string p = "failure." + std::to_string(k);
    r.failures[doc.get(p + ".reason")] = doc.get_uint(p + ".count");
  }
  return r;
}

KvDocument snap_pull_report_to_kv(const SnapPullReport& r) {
  KvDocument doc;
  doc.set("n", static_cast<std::uint64_t>(r.n));
  doc.set("removed", static_cast<std::uint64_t>(r.removed));
  doc.set("clean", static_cast<std::uint64_t>(r.clean));
  doc.set("torn", static_cast<std::uint64_t>(r.torn));
  put_rate(doc, "removal", r.removal);
  put_rate(doc, "clean_fraction", r.clean_fraction);
  return doc;
}

KvDocument trial_config_to_kv(const TrialConfig& c) {
  KvDocument doc;
  doc.set("cultivar", to_string(c.cultivar));
  doc.set("scenario", to_string(c.scenario));
  doc.set("unmodified_leaf_density", c.unmodified_leaf_density);
  doc.set("pepper_count", c.pepper_count);
  doc.set("seed", c.seed);

  doc.set("scan.mode", to_string(c.scan_mode));
  doc.set("scan.standoff", c.scan_standoff);
  doc.set("scan.margin", c.scan_margin);
  doc.set("scan.arc_span", c.arc_span);
  doc.set("arm.base_offset", c.arm_base_offset);

  doc.set("grasp.method", to_string(c.grasp_method));
  doc.set("grasp.weights", Vec3(c.weights.facing, c.weights.flatness, c.weights.centrality));
  doc.set("grasp.peduncle_offset", c.peduncle_offset);

  doc.set("detect.min_saturation", c.color.min_saturation);
  doc.set("detect.min_value", c.color.min_value);
  doc.set("segment.radius", c.segmentation.radius);
  doc.set("segment.min_points", static_cast<std::uint64_t>(c.segmentation.min_points));

  doc.set("sensor.rays", Vec2(c.sensor.horizontal_rays, c.sensor.vertical_rays));
  doc.set("sensor.field_of_view", c.sensor.field_of_view);
  doc.set("sensor.depth_noise", Vec2(c.sensor.depth_noise_base, c.sensor.depth_noise_quadratic));
  doc.set("sensor.color_noise_stddev", c.sensor.color_noise_stddev);
  doc.set("sensor.range", Vec2(c.sensor.min_range, c.sensor.max_range));

  doc.set("attach.kind", strategy_name(c.attach));
  if (const auto* s = std::get_if<SuctionCup>(&c.attach)) {
    doc.set("attach.cup_radius", s->cup_radius);
    doc.set("attach.max_normal_angle", s->max_normal_angle);
    doc.set("attach.localization_stddev", s->localization_stddev);
  } else if (const auto* g = std::get_if<FourFingerGripper>(&c.attach)) {
    doc.set("attach.aperture", g->aperture);
    doc.set("attach.entanglement_radius", g->entanglement_radius);
    doc.set("attach.pivot_slip_angle", g->pivot_slip_angle);
    doc.set("attach.localization_stddev", g->localization_stddev);
    doc.set("attach.max_normal_angle", g->max_normal_angle);
  }
  doc.set("detach.kind", strategy_name(c.detach));
  if (const auto* b = std::get_if<OscillatingBlade>(&c.detach)) {
    doc.set("detach.blade_half_width", b->blade_half_width);
    doc.set("detach.lateral_error_stddev", b->lateral_error_stddev);
  } else if (const auto* p = std::get_if<SnapPull>(&c.detach)) {
    doc.set("detach.clean_diameter", p->clean_diameter);
    doc.set("detach.max_diameter", p->max_diameter);
  } else if (const auto* w = std::get_if<WireLoop>(&c.detach)) {
    doc.set("detach.max_gap_diameter", w->max_gap_diameter);
    doc.set("detach.max_toughness", w->max_toughness);
  }
  doc.set("shared_error", c.shared_error);

  doc.set("timing.scan_per_waypoint", c.timing.scan_per_waypoint);
  doc.set("timing.detect", c.timing.detect);
  doc.set("timing.select", c.timing.select);
  doc.set("timing.attach_move", c.timing.attach_move);
  doc.set("timing.detach_move", c.timing.detach_move);
  doc.set("timing.magnet_recouple", c.timing.magnet_recouple);

  scene_config_to_kv(c.scene, doc, "scene.");
  return doc;
}

TrialConfig trial_config_from_kv(const KvDocument& doc) {
  const Cultivar cultivar = cultivar_from_string(doc.get("cultivar", "Claire"));
  const Scenario scenario = scenario_from_string(doc.get("scenario", "modified"));
  TrialConfig c = TrialConfig::preset(cultivar, scenario);
  override(doc, "unmodified_leaf_density", c.unmodified_leaf_density);
  c.pepper_count = static_cast<int>(doc.get_int("pepper_count", c.pepper_count));
  if (doc.has("seed")) c.seed = doc.get_uint("seed");

  if (doc.has("scan.mode")) c.scan_mode = scan_mode_from_string(doc.get("scan.mode"));
  override(doc, "scan.standoff", c.scan_standoff);
  override(doc, "scan.margin", c.scan_margin);
  override(doc, "scan.arc_span", c.arc_span);
  if (doc.has("arm.base_offset")) c.arm_base_offset = doc.get_vec3("arm.base_offset");

  if (doc.has("grasp.method")) c.grasp_method = grasp_method_from_string(doc.get("grasp.method"));
  if (doc.has("grasp.weights")) {
    const Vec3 w = doc.get_vec3("grasp.weights");
    c.weights = {w.x(), w.y(), w.z()};
  }
  override(doc, "grasp.peduncle_offset", c.peduncle_offset);

  override(doc, "detect.min_saturation", c.color.min_saturation);
  override(doc, "detect.min_value", c.color.min_value);
  override(doc, "segment.radius", c.segmentation.radius);
  if (doc.has("segment.min_points")) c.segmentation.min_points = doc.get_uint("segment.min_points");

  if (doc.has("sensor.rays")) {
    const Vec2 r = doc.get_vec2("sensor.rays");
    c.sensor.horizontal_rays = static_cast<int>(r.x());
    c.sensor.vertical_rays = static_cast<int>(r.y());
  }
  override(doc, "sensor.field_of_view", c.sensor.field_of_view);
  if (doc.has("sensor.depth_noise")) {
    const Vec2 d = doc.get_vec2("sensor.depth_noise");
    c.sensor.depth_noise_base = d.x();
    c.sensor.depth_noise_quadratic = d.y();
  }
  override(doc, "sensor.color_noise_stddev", c.sensor.color_noise_stddev);
  if (doc.has("sensor.range")) {
    const Vec2 r = doc.get_vec2("sensor.range");
    c.sensor.min_range = r.x();
    c.sensor.max_range = r.y();
  }

  const std::string attach_kind = doc.get("attach.kind", strategy_name(c.attach));
  if (attach_kind == "suction_cup") {
    SuctionCup s = std::holds_alternative<SuctionCup>(c.attach) ? std::get<SuctionCup>(c.attach)
                                                                : SuctionCup{};
    override(doc, "attach.cup_radius", s.cup_radius);
    override(doc, "attach.max_normal_angle", s.max_normal_angle);
    override(doc, "attach.localization_stddev", s.localization_stddev);
    c.attach = s;
  } else if (attach_kind == "four_finger_gripper") {
    FourFingerGripper g = std::holds_alternative<FourFingerGripper>(c.attach)
                              ? std::get<FourFingerGripper>(c.attach)
                              : FourFingerGripper{};
    override(doc, "attach.aperture", g.aperture);
    override(doc, "attach.entanglement_radius", g.entanglement_radius);
    override(doc, "attach.pivot_slip_angle", g.pivot_slip_angle);
    override(doc, "attach.localization_stddev", g.localization_stddev);
    override(doc, "attach.max_normal_angle", g.max_normal_angle);
    c.attach = g;
  } else {
    throw ConfigError("unknown attach strategy '" + attach_kind + "'");
  }

  const std::string detach_kind = doc.get("detach.kind", strategy_name(c.detach));
  if (detach_kind == "oscillating_blade") {
    OscillatingBlade b = std::holds_alternative<OscillatingBlade>(c.detach)
                             ? std::get<OscillatingBlade>(c.detach)
                             : OscillatingBlade{};
    override(doc, "detach.blade_half_width", b.blade_half_width);
    override(doc, "detach.lateral_error_stddev", b.lateral_error_stddev);
    c.detach = b;
  } else if (detach_kind == "snap_pull") {
    SnapPull p;
    override(doc, "detach.clean_diameter", p.clean_diameter);
    override(doc, "detach.max_diameter", p.max_diameter);
    c.detach = p;
  } else if (detach_kind == "wire_loop") {
    WireLoop w;
    override(doc, "detach.max_gap_diameter", w.max_gap_diameter);
    override(doc, "detach.max_toughness", w.max_toughness);
    c.detach = w;
  } else {
    throw ConfigError("unknown detach strategy '" + detach_kind + "'");
  }
  if (doc.has("shared_error")) c.shared_error = doc.get_bool("shared_error");

  override(doc, "timing.scan_per_waypoint", c.timing.scan_per_waypoint);
  override(doc, "timing.detect", c.timing.detect);
  override(doc, "timing.select", c.timing.select);
  override(doc, "timing.attach_move", c.timing.attach_move);
  override(doc, "timing.detach_move", c.timing.detach_move);
  override(doc, "timing.magnet_recouple", c.timing.magnet_recouple);

  c.scene = scene_config_from_kv(doc, "scene.", c.scene);
  c.validate();
  return c;
}

std::string attempts_to_csv(const std::vector<HarvestAttempt>& attempts) {
  std::ostringstream os;
  os << kAttemptCsvHeader << '\n';
  for (const HarvestAttempt& a : attempts) os << attempt_csv_row(a) << '\n';
  return os.str();
}

}  // namespace harvest
