/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include <iostream>

#include <CLI11.hpp>

#include "spherecast/cli.hpp"

int main(int argc, char** argv) {
  using namespace spherecast;

  CLI::App app{"spherecast: spherical advection + graph-network weather pipeline"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker cap (kernels currently run single-threaded)");

  cli::SynthArgs synth;
  CLI::App* s_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  s_synth->add_option("--out", synth.out, "output dataset path")->required();
  s_synth->add_option("--grid", synth.grid, "grid as LATxLON (default 16x8)");
  s_synth->add_option("--steps", synth.steps, "number of 6 h steps");
  s_synth->add_option("--seed", synth.seed, "generator seed");

  cli::GraphBuildArgs gb;
  CLI::App* s_graph = app.add_subcommand("graph-build", "build and serialize the spherical graph");
  s_graph->add_option("--grid", gb.grid, "grid as LATxLON (default 32x64)");
  s_graph->add_option("--gain", gb.gain, "Gaussian kernel gain");
  s_graph->add_option("--threshold", gb.threshold, "prune threshold");
  s_graph->add_flag("--planar", gb.planar, "planar-chart variant (no-topology ablation)");
  s_graph->add_option("--out", gb.out, "output graph path")->required();

  cli::SimulateArgs sim;
  CLI::App* s_sim = app.add_subcommand("simulate", "run forecasts from every admissible initial time");
  s_sim->add_option("--data", sim.data, "dataset path")->required();
  s_sim->add_option("--checkpoint", sim.checkpoint, "model checkpoint");
  s_sim->add_option("--graph", sim.graph_path, "prebuilt graph (built on the fly when omitted)");
  s_sim->add_option("--gain", sim.gain, "kernel gain when building the graph");
  s_sim->add_option("--threshold", sim.threshold, "prune threshold when building the graph");
  s_sim->add_option("--lead", sim.lead_hours, "lead time in hours (multiple of 6, max 144)");
  s_sim->add_option("--max-inits", sim.max_inits, "cap on initial times (0 = all)");
  s_sim->add_option("--out", sim.out_dir, "output directory")->required();
  s_sim->add_flag("--no-physics", sim.no_physics, "end-to-end ablation: direct 6 h deltas");
  s_sim->add_flag("--planar-graph", sim.planar_graph, "no-topology ablation graph");
  s_sim->add_flag("--zero-model", sim.zero_model, "all-zero parameters (diagnostics)");
  s_sim->add_option("--mu", sim.mu, "viscous friction coefficient (1/hour)");

  cli::EvaluateArgs ev;
  CLI::App* s_eval = app.add_subcommand("evaluate", "latitude-weighted RMSE/ACC tables");
  s_eval->add_option("--pred", ev.pred, "trajectory file")->required();
  s_eval->add_option("--data", ev.data, "observation dataset")->required();
  s_eval->add_option("--clim", ev.clim, "climatology file (dataset mean when omitted)");
  s_eval->add_option("--out", ev.out_csv, "metrics CSV path")->required();
  s_eval->add_option("--plot", ev.plot_svg, "write an SVG line chart to this path");

  cli::TrainArgs tr;
  CLI::App* s_train = app.add_subcommand("train", "train the model");
  s_train->add_option("--data", tr.data, "dataset path")->required();
  s_train->add_option("--out", tr.out_dir, "output directory")->required();
  s_train->add_option("--config", tr.config_json, "JSON config overrides");
  s_train->add_option("--graph", tr.graph_path, "prebuilt graph");
  s_train->add_option("--gain", tr.gain, "kernel gain when building the graph");
  s_train->add_option("--threshold", tr.threshold, "prune threshold when building the graph");
  s_train->add_option("--epochs", tr.epochs, "training epochs");
  s_train->add_option("--batch", tr.batch, "batch size");
  s_train->add_option("--seed", tr.seed, "seed for init and batch order");
  s_train->add_option("--steps-ahead", tr.steps_ahead, "autoregressive steps T_a (6 h each)");
  s_train->add_option("--model-size", tr.model_size, "desk or paper");
  s_train->add_flag("--no-physics", tr.no_physics, "end-to-end ablation");
  s_train->add_flag("--planar-graph", tr.planar_graph, "no-topology ablation graph");
  s_train->add_option("--mu", tr.mu, "viscous friction coefficient (1/hour)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  synth.threads = gb.threads = sim.threads = ev.threads = tr.threads = threads;
  if (s_synth->parsed()) return cli::run_synth(synth, std::cout);
  if (s_graph->parsed()) return cli::run_graph_build(gb, std::cout);
  if (s_sim->parsed()) return cli::run_simulate(sim, std::cout);
  if (s_eval->parsed()) return cli::run_evaluate(ev, std::cout);
  if (s_train->parsed()) return cli::run_train(tr, std::cout);
  return cli::kExitConfig;
}
