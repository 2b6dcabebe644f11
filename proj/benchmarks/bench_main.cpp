#include "harvest/arm.hpp"
#include "harvest/perception.hpp"
#include "harvest/scene.hpp"
#include "harvest/trials.hpp"

#include <benchmark/benchmark.h>

using namespace harvest;

namespace {

Scene bench_scene(int peppers) {
  SceneConfig cfg = SceneConfig::preset(Cultivar::Claire);
  cfg.pepper_count = peppers;
  cfg.leaf_density = 1.0;
  cfg.seed = 0xbe4c;
  return generate_scene(cfg);
}

const Pose kCamera = look_at({1.0, 0.9, 0.75}, {1.0, 0.0, 0.75});

}  // namespace

static void BM_RenderPointcloud(benchmark::State& state) {
  const Scene s = bench_scene(static_cast<int>(state.range(0)));
  SensorModel sensor;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(render_pointcloud(s, kCamera, sensor, ++seed));
  state.SetItemsProcessed(state.iterations() * sensor.ray_count());
}
BENCHMARK(BM_RenderPointcloud)->Arg(5)->Arg(20)->Arg(80);

static void BM_SegmentClusters(benchmark::State& state) {
  const Scene s = bench_scene(20);
  SensorModel sensor;
  sensor.horizontal_rays = static_cast<int>(state.range(0));
  sensor.vertical_rays = sensor.horizontal_rays * 3 / 4;
  const ColoredPointCloud cloud = render_pointcloud(s, kCamera, sensor, 1);
  const auto red = detect_color(cloud, ColorModel::ripe_red());
  const SegmentationParams p;
  for (auto _ : state) benchmark::DoNotOptimize(segment_clusters(cloud, red, p.radius, p.min_points));
  state.counters["red_points"] = static_cast<double>(red.size());
}
BENCHMARK(BM_SegmentClusters)->Arg(80)->Arg(160)->Arg(320);

static void BM_SolveIk(benchmark::State& state) {
  const ArmModel arm = ArmModel::generic();
  JointConfig q;
  q[0] = 0.3, q[1] = -0.4, q[3] = 0.5, q[5] = 0.2;
  const Pose target = forward_kinematics(arm, q);
  for (auto _ : state) benchmark::DoNotOptimize(solve_ik(arm, target, JointConfig{}));
}
BENCHMARK(BM_SolveIk);

static void BM_SimulatePepper(benchmark::State& state) {
  TrialConfig cfg = TrialConfig::preset(Cultivar::Claire);
  cfg.seed = 0xbe4c;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_pepper(cfg, i++));
}
BENCHMARK(BM_SimulatePepper);

static void BM_RunTrial(benchmark::State& state) {
  TrialConfig cfg = TrialConfig::preset(Cultivar::Claire);
  cfg.pepper_count = static_cast<int>(state.range(0));
  cfg.seed = 0xbe4c;
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunTrial)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
