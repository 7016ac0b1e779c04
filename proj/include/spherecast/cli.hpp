/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <iosfwd>
#include <string>

#include "spherecast/common.hpp"

namespace spherecast::cli {

// Exit codes: 0 success; distinct nonzero classes for config, data and
// numeric failures.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

struct SynthArgs {
  std::string out;
  std::string grid = "16x8";
  int steps = 40;
  uint64_t seed = 1;
  int threads = 1;
};

struct GraphBuildArgs {
  std::string grid = "32x64";
  double gain = 200.0;
  double threshold = 0.0275;
  bool planar = false;
  std::string out;
  int threads = 1;
};

struct SimulateArgs {
  std::string data;
  std::string checkpoint;     // required unless zero_model
  std::string graph_path;     // optional; built from the grid when empty
  double gain = 200.0;
  double threshold = 0.0275;
  double lead_hours = 24.0;
  int max_inits = 0;          // 0 = all admissible initial times
  std::string out_dir;
  bool no_physics = false;
  bool planar_graph = false;
  bool zero_model = false;    // all-zero parameters (diagnostics)
  double mu = 1e-4;
  int threads = 1;
};

struct EvaluateArgs {
  std::string pred;           // trajectory file
  std::string data;           // observation dataset
  std::string clim;           // optional climatology file; dataset mean when empty
  std::string out_csv;
  std::string plot_svg;       // optional
  int threads = 1;
};

struct TrainArgs {
  std::string data;
  std::string out_dir;
  std::string config_json;    // optional JSON with LossConfig/OptimizerConfig overrides
  std::string graph_path;     // optional prebuilt graph
  double gain = 200.0;
  double threshold = 0.0275;
  int epochs = 20;
  int batch = 2;
  uint64_t seed = 7;
  int steps_ahead = 4;        // T_a
  std::string model_size = "desk";  // desk | paper
  bool no_physics = false;
  bool planar_graph = false;
  double mu = 1e-4;
  int threads = 1;
};

int run_synth(const SynthArgs& args, std::ostream& log);
int run_graph_build(const GraphBuildArgs& args, std::ostream& log);
int run_simulate(const SimulateArgs& args, std::ostream& log);
int run_evaluate(const EvaluateArgs& args, std::ostream& log);
int run_train(const TrainArgs& args, std::ostream& log);

// "32x64" -> (32, 64)
std::pair<int, int> parse_grid_spec(const std::string& spec);

}  // namespace spherecast::cli
