/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spherecast/cli.hpp"
#include "spherecast/data_io.hpp"
#include "spherecast/gnn.hpp"

using namespace spherecast;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("spherecast_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// Toy-scale CLI defaults shared by the workflow tests.
cli::SynthArgs synth_args(const TempDir& dir) {
  cli::SynthArgs a;
  a.out = dir / "data.bin";
  a.grid = "16x8";
  a.steps = 8;
  a.seed = 5;
  return a;
}

}  // namespace

TEST_CASE("grid spec parsing") {
  CHECK(cli::parse_grid_spec("32x64") == std::pair<int, int>{32, 64});
  CHECK(cli::parse_grid_spec("16x8") == std::pair<int, int>{16, 8});
  CHECK_THROWS_AS(cli::parse_grid_spec("32"), ConfigError);
  CHECK_THROWS_AS(cli::parse_grid_spec("x64"), ConfigError);
  CHECK_THROWS_AS(cli::parse_grid_spec("ax b"), ConfigError);
}

TEST_CASE("synth and graph-build emit artifacts and manifests") {
  TempDir dir;
  std::ostringstream log;
  CHECK(cli::run_synth(synth_args(dir), log) == cli::kExitOk);
  CHECK(fs::exists(dir / "data.bin"));
  CHECK(fs::exists(dir / "data.bin.manifest.json"));
  CHECK(fs::exists(dir / "data.bin.run.json"));
  // The run manifest records args and input hashes.
  nlohmann::json run = nlohmann::json::parse(std::ifstream(dir / "data.bin.run.json"));
  CHECK(run.at("command") == "synth");
  CHECK(run.at("args").at("seed") == 5);

  cli::GraphBuildArgs g;
  g.grid = "16x8";
  g.gain = 4.0;
  g.out = dir / "graph.bin";
  std::ostringstream glog;
  CHECK(cli::run_graph_build(g, glog) == cli::kExitOk);
  CHECK(glog.str().find("nodes=128") != std::string::npos);
  CHECK(fs::exists(dir / "graph.bin"));
}

TEST_CASE("graph-build prints the published counts for the 5.625-degree grid") {
  TempDir dir;
  cli::GraphBuildArgs g;
  g.grid = "32x64";
  g.out = dir / "g32.bin";
  std::ostringstream log;
  CHECK(cli::run_graph_build(g, log) == cli::kExitOk);
  CHECK(log.str().find("nodes=2048") != std::string::npos);
  CHECK(log.str().find("edges=9152") != std::string::npos);
  CHECK(log.str().find("min_degree=5") != std::string::npos);
}

TEST_CASE("train with zero epochs writes the initialization checkpoint") {
  TempDir dir;
  std::ostringstream log;
  REQUIRE(cli::run_synth(synth_args(dir), log) == cli::kExitOk);
  cli::TrainArgs t;
  t.data = dir / "data.bin";
  t.out_dir = dir / "run0";
  t.gain = 4.0;
  t.epochs = 0;
  t.seed = 21;
  t.steps_ahead = 1;
  REQUIRE(cli::run_train(t, log) == cli::kExitOk);
  GnnModel loaded = load_checkpoint(dir / "run0/model.ckpt");
  GnnModel fresh = GnnModel::init(GnnConfig::desk_size(), 21);
  CHECK(loaded.content_hash() == fresh.content_hash());
  CHECK(fs::exists(dir / "run0/train_log.csv"));
  CHECK(fs::exists(dir / "run0/manifest.json"));
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  TempDir dir;
  std::ostringstream log;
  REQUIRE(cli::run_synth(synth_args(dir), log) == cli::kExitOk);
  auto train_once = [&](const std::string& out) {
    cli::TrainArgs t;
    t.data = dir / "data.bin";
    t.out_dir = dir / out;
    t.gain = 4.0;
    t.epochs = 1;
    t.batch = 2;
    t.seed = 33;
    t.steps_ahead = 1;
    REQUIRE(cli::run_train(t, log) == cli::kExitOk);
    return load_checkpoint((dir / out) + "/model.ckpt").content_hash();
  };
  CHECK(train_once("run_a") == train_once("run_b"));
}

TEST_CASE("simulate with a zero model in the end-to-end mode is the identity") {
  TempDir dir;
  std::ostringstream log;
  REQUIRE(cli::run_synth(synth_args(dir), log) == cli::kExitOk);
  cli::SimulateArgs s;
  s.data = dir / "data.bin";
  s.out_dir = dir / "sim";
  s.gain = 4.0;
  s.lead_hours = 6.0;
  s.zero_model = true;
  s.no_physics = true;
  REQUIRE(cli::run_simulate(s, log) == cli::kExitOk);
  Trajectory traj = load_trajectory(dir / "sim/trajectory.bin");
  Dataset ds = load_dataset(dir / "data.bin");
  REQUIRE(traj.lead_hours == std::vector<double>{6.0});
  for (size_t i = 0; i < traj.init_steps.size(); ++i)
    for (int v = 0; v < 5; ++v) {
      // Forecast equals the initial fields (up to the f32 storage round trip).
      const Tensor& pred = traj.data[i][0][v];
      const Tensor& init = ds.steps[traj.init_steps[i]][v];
      for (size_t k = 0; k < pred.size(); ++k) CHECK(pred.data[k] == doctest::Approx(init.data[k]).epsilon(1e-6));
    }
}

TEST_CASE("lead time caps and cadence validation") {
  TempDir dir;
  std::ostringstream log;
  REQUIRE(cli::run_synth(synth_args(dir), log) == cli::kExitOk);
  cli::SimulateArgs s;
  s.data = dir / "data.bin";
  s.out_dir = dir / "sim";
  s.zero_model = true;
  s.lead_hours = 7.0;
  CHECK(cli::run_simulate(s, log) == cli::kExitConfig);
  s.lead_hours = 150.0;
  CHECK(cli::run_simulate(s, log) == cli::kExitConfig);
  s.lead_hours = 6.0;
  s.checkpoint = "";
  s.zero_model = false;
  CHECK(cli::run_simulate(s, log) == cli::kExitConfig);
}

TEST_CASE("evaluate: perfect predictions score zero RMSE and unit ACC") {
  TempDir dir;
  std::ostringstream log;
  REQUIRE(cli::run_synth(synth_args(dir), log) == cli::kExitOk);
  Dataset ds = load_dataset(dir / "data.bin");

  // Build a "perfect forecast" trajectory straight from the observations.
  Trajectory traj;
  traj.grid = ds.grid;
  traj.var_names = ds.var_names;
  traj.stats = ds.stats;
  traj.lead_hours = {6.0, 12.0};
  for (int init = 0; init < 3; ++init) {
    traj.init_steps.push_back(init);
    std::vector<std::vector<Tensor>> leads;
    for (int l = 1; l <= 2; ++l) leads.push_back(ds.steps[init + l]);
    traj.data.push_back(std::move(leads));
  }
  save_trajectory(traj, dir / "perfect.bin");

  cli::EvaluateArgs e;
  e.pred = dir / "perfect.bin";
  e.data = dir / "data.bin";
  e.out_csv = dir / "metrics.csv";
  e.plot_svg = dir / "metrics.svg";
  REQUIRE(cli::run_evaluate(e, log) == cli::kExitOk);
  CHECK(fs::exists(dir / "metrics.svg"));

  std::ifstream csv(dir / "metrics.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "variable,lead_time_hours,rmse,acc");
  int rows = 0;
  std::string line;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string var, lead, rm, ac;
    std::getline(ss, var, ',');
    std::getline(ss, lead, ',');
    std::getline(ss, rm, ',');
    std::getline(ss, ac, ',');
    CHECK(std::stod(rm) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::stod(ac) == doctest::Approx(1.0).epsilon(1e-9));
    ++rows;
  }
  CHECK(rows == 10);  // 5 variables x 2 lead times
}

TEST_CASE("evaluate: persistence RMSE is nondecreasing in lead time") {
  TempDir dir;
  std::ostringstream log;
  cli::SynthArgs sa = synth_args(dir);
  sa.steps = 16;
  REQUIRE(cli::run_synth(sa, log) == cli::kExitOk);
  Dataset ds = load_dataset(dir / "data.bin");

  Trajectory traj;
  traj.grid = ds.grid;
  traj.var_names = ds.var_names;
  traj.stats = ds.stats;
  for (int l = 1; l <= 8; ++l) traj.lead_hours.push_back(6.0 * l);
  for (int init = 0; init < 6; ++init) {
    traj.init_steps.push_back(init);
    std::vector<std::vector<Tensor>> leads(8, ds.steps[init]);  // persistence
    traj.data.push_back(std::move(leads));
  }
  save_trajectory(traj, dir / "persist.bin");

  cli::EvaluateArgs e;
  e.pred = dir / "persist.bin";
  e.data = dir / "data.bin";
  e.out_csv = dir / "persist.csv";
  REQUIRE(cli::run_evaluate(e, log) == cli::kExitOk);

  std::ifstream csv(dir / "persist.csv");
  std::string line;
  std::getline(csv, line);  // header
  std::map<std::string, std::vector<double>> rmse_by_var;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string var, lead, rm, ac;
    std::getline(ss, var, ',');
    std::getline(ss, lead, ',');
    std::getline(ss, rm, ',');
    std::getline(ss, ac, ',');
    rmse_by_var[var].push_back(std::stod(rm));
  }
  for (const auto& [var, series] : rmse_by_var) {
    REQUIRE(series.size() == 8);
    for (size_t i = 1; i < series.size(); ++i)
      CHECK_MESSAGE(series[i] >= series[i - 1] * (1.0 - 1e-9), var, " at lead index ", i);
  }
}

TEST_CASE("exit codes distinguish config, data and numeric failures") {
  TempDir dir;
  std::ostringstream log;
  // Data failure: missing input file.
  cli::EvaluateArgs e;
  e.pred = dir / "nope.bin";
  e.data = dir / "nope2.bin";
  e.out_csv = dir / "m.csv";
  CHECK(cli::run_evaluate(e, log) == cli::kExitData);
  // Config failure: malformed grid spec.
  cli::GraphBuildArgs g;
  g.grid = "not-a-grid";
  g.out = dir / "g.bin";
  CHECK(cli::run_graph_build(g, log) == cli::kExitConfig);
  // Config failure: disconnecting threshold.
  g.grid = "16x8";
  g.threshold = 0.9999;
  CHECK(cli::run_graph_build(g, log) == cli::kExitConfig);
  // Numeric failure: checkpoint with non-finite parameters.
  REQUIRE(cli::run_synth(synth_args(dir), log) == cli::kExitOk);
  GnnModel m = GnnModel::init(GnnConfig::desk_size(), 0);
  m.param("embed.W").value.at(0, 0) = std::numeric_limits<double>::infinity();
  save_checkpoint(m, dir / "bad.ckpt");
  cli::SimulateArgs s;
  s.data = dir / "data.bin";
  s.checkpoint = dir / "bad.ckpt";
  s.out_dir = dir / "simbad";
  s.gain = 4.0;
  s.lead_hours = 6.0;
  CHECK(cli::run_simulate(s, log) == cli::kExitNumeric);
}

TEST_CASE("the maximum 144 h lead emits 24 snapshots per initial time") {
  TempDir dir;
  std::ostringstream log;
  cli::SynthArgs sa = synth_args(dir);
  sa.steps = 26;
  REQUIRE(cli::run_synth(sa, log) == cli::kExitOk);
  cli::SimulateArgs s;
  s.data = dir / "data.bin";
  s.out_dir = dir / "sim144";
  s.gain = 4.0;
  s.lead_hours = 144.0;
  s.zero_model = true;
  s.no_physics = true;  // keep the long horizon cheap
  s.max_inits = 1;
  REQUIRE(cli::run_simulate(s, log) == cli::kExitOk);
  Trajectory traj = load_trajectory(dir / "sim144/trajectory.bin");
  CHECK(traj.lead_hours.size() == 24);
  CHECK(traj.lead_hours.back() == 144.0);
  CHECK(traj.data[0].size() == 24);
}

TEST_CASE("SPHERECAST_DATA_ROOT resolves relative dataset paths") {
  TempDir dir;
  std::ostringstream log;
  REQUIRE(cli::run_synth(synth_args(dir), log) == cli::kExitOk);
  setenv("SPHERECAST_DATA_ROOT", dir.path.string().c_str(), 1);
  cli::SimulateArgs s;
  s.data = "data.bin";  // relative; not in the working directory
  s.out_dir = dir / "simroot";
  s.gain = 4.0;
  s.lead_hours = 6.0;
  s.zero_model = true;
  s.no_physics = true;
  s.max_inits = 1;
  CHECK(cli::run_simulate(s, log) == cli::kExitOk);
  unsetenv("SPHERECAST_DATA_ROOT");
  CHECK(cli::run_simulate(s, log) == cli::kExitData);  // no longer resolvable
}

TEST_CASE("full toy workflow: synth, train, simulate, evaluate") {
  TempDir dir;
  std::ostringstream log;
  cli::SynthArgs sa = synth_args(dir);
  sa.steps = 10;
  REQUIRE(cli::run_synth(sa, log) == cli::kExitOk);

  cli::TrainArgs t;
  t.data = dir / "data.bin";
  t.out_dir = dir / "run";
  t.gain = 4.0;
  t.epochs = 2;
  t.batch = 2;
  t.seed = 11;
  t.steps_ahead = 1;
  REQUIRE(cli::run_train(t, log) == cli::kExitOk);

  cli::SimulateArgs s;
  s.data = dir / "data.bin";
  s.checkpoint = dir / "run/model.ckpt";
  s.out_dir = dir / "fc";
  s.gain = 4.0;
  s.lead_hours = 12.0;
  s.max_inits = 4;
  REQUIRE(cli::run_simulate(s, log) == cli::kExitOk);

  cli::EvaluateArgs e;
  e.pred = dir / "fc/trajectory.bin";
  e.data = dir / "data.bin";
  e.out_csv = dir / "fc/metrics.csv";
  REQUIRE(cli::run_evaluate(e, log) == cli::kExitOk);
  std::ifstream csv(dir / "fc/metrics.csv");
  int lines = 0;
  std::string line;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 1 + 5 * 2);
}
