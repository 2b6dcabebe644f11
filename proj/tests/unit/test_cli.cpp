#include "harvest/kv_text.hpp"
#include "harvest/scene_io.hpp"
#include "harvest/trials.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace harvest;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("harvest_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  CliRun run(const std::string& args) const {
    const std::string out = path("stdout.txt");
    const std::string cmd = std::string(HARVEST_CLI_PATH) + " " + args + " > " + out + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read("stdout.txt");
    return r;
  }

  fs::path dir_;
};

std::string config(const std::string& name) { return std::string(HARVEST_CONFIG_DIR) + "/" + name; }

}  // namespace

TEST_F(Cli, GenSceneWritesReadableScene) {
  write("scene.cfg", "cultivar = Claire\npepper_count = 12\nleaf_density = 1.0\n");
  const CliRun r = run("gen-scene --config " + path("scene.cfg") + " --seed 5 --out " + path("scene.txt"));
  ASSERT_EQ(r.code, 0) << r.out;
  const Scene s = read_scene(read("scene.txt"));
  EXPECT_EQ(s.peppers.size(), 12u);
  EXPECT_EQ(s.leaves.size(), 12u);
  // Same seed, same bytes.
  ASSERT_EQ(run("gen-scene --config " + path("scene.cfg") + " --seed 5 --out " + path("again.txt")).code, 0);
  EXPECT_EQ(read("scene.txt"), read("again.txt"));
}

TEST_F(Cli, RenderThenDetect) {
  write("scene.cfg", "cultivar = Claire\npepper_count = 3\n");
  ASSERT_EQ(run("gen-scene --config " + path("scene.cfg") + " --seed 1 --out " + path("scene.txt")).code, 0);
  const CliRun r = run("render --scene " + path("scene.txt") + " --eye \"1 0.8 0.75\" --target \"1 0 0.75\" --out " +
                    path("cloud.ply") + " --noiseless");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(read("cloud.ply").rfind("ply\n", 0), 0u);
  const CliRun d = run("detect --ply " + path("cloud.ply"));
  ASSERT_EQ(d.code, 0) << d.out;
  EXPECT_NE(d.out.find("detection.count"), std::string::npos);
}

TEST_F(Cli, RunTrialWritesReportAndAttempts) {
  const CliRun r = run("run-trial --config " + config("claire_modified.cfg") + " --n 20 --seed 3 --out-report " +
                    path("report.txt") + " --out-attempts " + path("attempts.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const TrialReport rep = trial_report_from_kv(KvDocument::load(path("report.txt")));
  EXPECT_EQ(rep.n, 20u);
  EXPECT_EQ(rep.cultivar, Cultivar::Claire);
  const std::string csv = read("attempts.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
  // Thread count does not change the report.
  ASSERT_EQ(run("run-trial --config " + config("claire_modified.cfg") + " --n 20 --seed 3 --threads 3 --out-report " +
                path("report3.txt"))
                .code,
            0);
  EXPECT_EQ(read("report.txt"), read("report3.txt"));
}

TEST_F(Cli, CompareExitCodeFollowsMetrics) {
  TrialReport good;
  good.cultivar = Cultivar::Claire;
  good.n = 100;
  good.attach = estimate_rate(58, 100);
  good.detach = estimate_rate(92, 100);
  good.combined = estimate_rate(58, 100);
  good.completed = 100;
  good.mean_cycle_time = 36.0;
  trial_report_to_kv(good).save(path("good.txt"));
  TrialReport bad = good;
  bad.attach = estimate_rate(40, 100);
  trial_report_to_kv(bad).save(path("bad.txt"));

  const CliRun pass = run("compare --report " + path("good.txt") + " --trial claire --tolerance 0.03");
  EXPECT_EQ(pass.code, 0) << pass.out;
  EXPECT_NE(pass.out.find("all metrics pass"), std::string::npos);
  const CliRun fail = run("compare --report " + path("bad.txt") + " --trial claire --tolerance 0.03");
  EXPECT_EQ(fail.code, 1) << fail.out;
  EXPECT_NE(fail.out.find("FAIL attach_rate"), std::string::npos);
  // Wrong trial identity is an error, not a metric failure.
  EXPECT_EQ(run("compare --report " + path("good.txt") + " --trial redject --tolerance 0.03").code, 2);
}

TEST_F(Cli, BenchSnapPull) {
  const CliRun r = run("bench-snap-pull --n 5000 --seed 9");
  ASSERT_EQ(r.code, 0) << r.out;
  const KvDocument doc = KvDocument::parse(r.out);
  EXPECT_EQ(doc.get_uint("n"), 5000u);
  EXPECT_NEAR(doc.get_double("removal.rate"), 17.0 / 22.0, 0.03);
}

TEST_F(Cli, DesignFingers) {
  write("widths.txt", "0.07\n0.075\n0.08\n");
  write("bounds.txt", "proximal = 0.01 0.06\ndistal = 0.01 0.06\npalm = 0.02 0.05\n");
  const CliRun r = run("design-fingers --samples " + path("widths.txt") + " --bounds " + path("bounds.txt") +
                    " --resolution 6");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_DOUBLE_EQ(KvDocument::parse(r.out).get_double("score"), 1.0);
}

TEST_F(Cli, BadInvocationsFail) {
  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("run-trial --n 5").code, 0);
  write("widths.txt", "0.07\nabc\n");
  write("bounds.txt", "proximal = 0.01 0.06\ndistal = 0.01 0.06\npalm = 0.02 0.05\n");
  EXPECT_EQ(run("design-fingers --samples " + path("widths.txt") + " --bounds " + path("bounds.txt") +
                " --resolution 6")
                .code,
            2);
}
