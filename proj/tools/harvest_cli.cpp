#include "harvest/design_opt.hpp"
#include "harvest/errors.hpp"
#include "harvest/kv_text.hpp"
#include "harvest/perception.hpp"
#include "harvest/scene_io.hpp"
#include "harvest/trials.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

using namespace harvest;

namespace {

Vec3 parse_vec3(const std::string& text) {
  KvDocument doc = KvDocument::parse("v = " + text);
  return doc.get_vec3("v");
}

void print_report(const TrialReport& r) {
  std::cout << "cultivar " << to_string(r.cultivar) << ", " << to_string(r.scenario) << ", n "
            << r.n << '\n';
  auto line = [](const char* name, const RateEstimate& e) {
    std::printf("  %-9s %.4f  [%.4f, %.4f]\n", name, e.rate, e.lo, e.hi);
  };
  line("attach", r.attach);
  line("detach", r.detach);
  line("combined", r.combined);
  std::printf("  P(detach|attach) %.4f  P(detach|no attach) %.4f\n", r.p_detach_given_attach(),
              r.p_detach_given_no_attach());
  std::printf("  mean cycle time %.2f s over %zu completed\n", r.mean_cycle_time, r.completed);
  std::printf("  stage share scan %.3f detect %.3f select %.3f attach %.3f detach %.3f\n",
              r.stage_share[0], r.stage_share[1], r.stage_share[2], r.stage_share[3],
              r.stage_share[4]);
  for (const auto& [reason, count] : r.failures) std::printf("  %-28s %zu\n", reason.c_str(), count);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sweet-pepper harvesting simulator"};
  app.require_subcommand(1);
  int exit_code = 0;

  auto* gen = app.add_subcommand("gen-scene", "Generate a scene from a scene config file");
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--config", gen_config, "scene config (key = value)")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", gen_seed, "scene seed")->required();
  gen->add_option("--out", gen_out, "output scene file")->required();
  gen->callback([&] {
    SceneConfig cfg = scene_config_from_kv(KvDocument::load(gen_config), "");
    cfg.seed = gen_seed;
    const Scene scene = generate_scene(cfg);
    write_text_file(gen_out, write_scene(scene));
    std::cout << "wrote " << scene.peppers.size() << " peppers, " << scene.leaves.size()
              << " leaves to " << gen_out << '\n';
  });

  auto* render = app.add_subcommand("render", "Render a scene file to an ASCII PLY point cloud");
  std::string render_scene, render_out, render_eye, render_target;
  std::uint64_t render_seed = 0;
  bool render_noiseless = false;
  render->add_option("--scene", render_scene)->required()->check(CLI::ExistingFile);
  render->add_option("--eye", render_eye, "camera position \"x y z\"")->required();
  render->add_option("--target", render_target, "look-at point \"x y z\"")->required();
  render->add_option("--out", render_out)->required();
  render->add_option("--noise-seed", render_seed);
  render->add_flag("--noiseless", render_noiseless);
  render->callback([&] {
    const Scene scene = read_scene(read_text_file(render_scene));
    const SensorModel sensor = render_noiseless ? SensorModel::noiseless() : SensorModel{};
    const Pose camera = look_at(parse_vec3(render_eye), parse_vec3(render_target));
    const ColoredPointCloud cloud = render_pointcloud(scene, camera, sensor, render_seed);
    write_text_file(render_out, write_ply(cloud));
    std::cout << "wrote " << cloud.size() << " points to " << render_out << '\n';
  });

  auto* detect = app.add_subcommand("detect", "Detect and segment ripe peppers in a PLY cloud");
  std::string detect_ply;
  double detect_radius = SegmentationParams{}.radius;
  std::size_t detect_min = SegmentationParams{}.min_points;
  detect->add_option("--ply", detect_ply)->required()->check(CLI::ExistingFile);
  detect->add_option("--radius", detect_radius);
  detect->add_option("--min-points", detect_min);
  detect->callback([&] {
    const ColoredPointCloud cloud = read_ply(read_text_file(detect_ply));
    const auto dets = segment_clusters(cloud, detect_color(cloud, ColorModel::ripe_red()),
                                       detect_radius, detect_min);
    std::cout << detections_to_kv(dets).to_string();
  });

  auto* run = app.add_subcommand("run-trial", "Run a Monte-Carlo field trial");
  std::string run_config, run_report, run_attempts;
  int run_n = 0;
  std::uint64_t run_seed = 0;
  unsigned run_threads = 0;
  run->add_option("--config", run_config, "trial config (key = value)")->required()->check(CLI::ExistingFile);
  run->add_option("--n", run_n, "number of peppers")->required();
  run->add_option("--seed", run_seed)->required();
  run->add_option("--out-report", run_report)->required();
  run->add_option("--out-attempts", run_attempts, "per-pepper CSV trace");
  run->add_option("--threads", run_threads, "worker threads (0 = all cores)");
  run->callback([&] {
    TrialConfig cfg = trial_config_from_kv(KvDocument::load(run_config));
    cfg.pepper_count = run_n;
    cfg.seed = run_seed;
    const TrialResult result = run_trial_detailed(cfg, run_threads);
    trial_report_to_kv(result.report).save(run_report);
    if (!run_attempts.empty()) write_text_file(run_attempts, attempts_to_csv(result.attempts));
    print_report(result.report);
  });

  auto* cmp = app.add_subcommand("compare", "Compare a trial report with the field results");
  std::string cmp_report, cmp_trial;
  double cmp_tol = 0.03;
  cmp->add_option("--report", cmp_report)->required()->check(CLI::ExistingFile);
  cmp->add_option("--trial", cmp_trial)->required()->check(CLI::IsMember({"claire", "redject"}));
  cmp->add_option("--tolerance", cmp_tol)->required()->check(CLI::NonNegativeNumber);
  cmp->callback([&] {
    const TrialReport report = trial_report_from_kv(KvDocument::load(cmp_report));
    const Comparison c = compare_to_reference(report, ReferenceTable::by_name(cmp_trial),
                                              CompareTolerances::uniform(cmp_tol));
    std::cout << c.summary();
    exit_code = c.all_pass() ? 0 : 1;
  });

  auto* bench = app.add_subcommand("bench-snap-pull", "Simulate the snap-pull bench test");
  std::size_t bench_n = 0;
  std::uint64_t bench_seed = 0;
  bench->add_option("--n", bench_n)->required()->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed)->required();
  bench->callback([&] { std::cout << snap_pull_report_to_kv(run_snap_pull_bench(bench_n, bench_seed)).to_string(); });

  auto* fingers = app.add_subcommand("design-fingers", "Grid-search finger link lengths");
  std::string fingers_samples, fingers_bounds;
  int fingers_res = 0;
  fingers->add_option("--samples", fingers_samples, "pepper widths, one per line")->required()->check(CLI::ExistingFile);
  fingers->add_option("--bounds", fingers_bounds, "proximal/distal/palm = lo hi")->required()->check(CLI::ExistingFile);
  fingers->add_option("--resolution", fingers_res)->required();
  fingers->callback([&] {
    const auto widths = parse_width_samples(read_text_file(fingers_samples));
    const auto bounds = finger_bounds_from_kv(KvDocument::load(fingers_bounds));
    std::cout << finger_design_to_kv(optimize_finger_links(widths, bounds, fingers_res)).to_string();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return exit_code;
}
