/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "spherecast/graph.hpp"
#include "spherecast/integrator.hpp"
#include "spherecast/metrics.hpp"
#include "spherecast/training.hpp"

namespace spherecast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::pair<int, int> parse_grid_spec(const std::string& spec) {
  const size_t x = spec.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= spec.size())
    throw ConfigError("grid spec must look like 32x64, got: " + spec);
  try {
    return {std::stoi(spec.substr(0, x)), std::stoi(spec.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("grid spec must look like 32x64, got: " + spec);
  }
}

namespace {

int map_error(const std::exception& e, std::ostream& log) {
  log << "error: " << e.what() << "\n";
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const DimensionError*>(&e)) return kExitNumeric;
  return kExitFailure;
}

// Relative input paths fall back to $SPHERECAST_DATA_ROOT when they do not
// resolve from the working directory.
std::string resolve_input(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* root = std::getenv("SPHERECAST_DATA_ROOT")) {
    const fs::path candidate = fs::path(root) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
  }
  return h;
}

std::string hex64(uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// Every command emits a manifest sufficient to reproduce the run:
// arguments, seeds, thread cap and content hashes of all inputs.
void write_manifest(const std::string& path, const std::string& command, const json& args,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["args"] = args;
  json in = json::object();
  for (const std::string& p : inputs) in[p] = "fnv1a64:" + hex64(file_hash(p));
  m["inputs"] = in;
  m["outputs"] = outputs;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << m.dump(2) << "\n";
}

GnnConfig model_config_for(const std::string& size) {
  if (size == "desk") return GnnConfig::desk_size();
  if (size == "paper") return GnnConfig::paper_size();
  throw ConfigError("model size must be desk or paper, got: " + size);
}

SphericalGraph obtain_graph(const std::string& graph_path, const GridPtr& grid, double gain, double threshold,
                            bool planar) {
  if (!graph_path.empty()) {
    SphericalGraph g = load_graph(graph_path);
    if (!g.grid->same_layout(*grid)) throw DataError("graph/dataset grid mismatch: " + graph_path);
    return g;
  }
  GraphBuildOptions opt;
  opt.kernel_gain = gain;
  opt.prune_threshold = threshold;
  opt.planar = planar;
  return build_graph(grid, opt);
}

struct MetricRow {
  std::string variable;
  double lead_hours;
  double rmse;
  double acc;
};

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics csv: " + path);
  out << "variable,lead_time_hours,rmse,acc\n";
  out << std::setprecision(10);
  for (const MetricRow& r : rows)
    out << r.variable << "," << r.lead_hours << "," << r.rmse << "," << r.acc << "\n";
}

// Minimal two-panel line chart (RMSE above, ACC below), one polyline per
// variable, normalized per variable so different units share an axis.
void write_metrics_svg(const std::string& path, const std::vector<MetricRow>& rows) {
  std::map<std::string, std::vector<const MetricRow*>> by_var;
  std::vector<double> leads;
  for (const MetricRow& r : rows) {
    by_var[r.variable].push_back(&r);
    if (by_var.size() == 1) leads.push_back(r.lead_hours);
  }
  const int W = 640, H = 560, panel_h = 240, margin = 40;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write svg: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  auto panel = [&](int top, const std::string& title, auto value_of, double vmin, double vmax) {
    out << "<text x='" << margin << "' y='" << top - 8 << "' font-size='14'>" << title << "</text>\n";
    out << "<rect x='" << margin << "' y='" << top << "' width='" << W - 2 * margin << "' height='" << panel_h
        << "' fill='none' stroke='#888'/>\n";
    if (leads.empty()) return;
    const double x0 = leads.front(), x1 = std::max(leads.back(), x0 + 1.0);
    int ci = 0;
    for (const auto& [name, rs] : by_var) {
      out << "<polyline fill='none' stroke='" << colors[ci % 6] << "' stroke-width='1.5' points='";
      for (const MetricRow* r : rs) {
        const double fx = (r->lead_hours - x0) / (x1 - x0);
        const double fy = (value_of(*r) - vmin) / (vmax - vmin + 1e-300);
        out << margin + fx * (W - 2 * margin) << "," << top + panel_h - fy * panel_h << " ";
      }
      out << "'/>\n";
      out << "<text x='" << W - margin + 2 << "' y='" << top + 14 + 14 * ci << "' font-size='10' fill='"
          << colors[ci % 6] << "'>" << name << "</text>\n";
      ++ci;
    }
  };
  // Per-variable normalized RMSE panel (each series scaled by its max).
  std::map<std::string, double> rmse_max;
  for (const MetricRow& r : rows) rmse_max[r.variable] = std::max(rmse_max[r.variable], r.rmse);
  panel(margin, "RMSE (per-variable normalized)", [&](const MetricRow& r) {
    return rmse_max[r.variable] > 0 ? r.rmse / rmse_max[r.variable] : 0.0;
  }, 0.0, 1.0);
  panel(2 * margin + panel_h, "ACC", [](const MetricRow& r) { return r.acc; }, -0.2, 1.0);
  out << "</svg>\n";
}

}  // namespace

int run_synth(const SynthArgs& args, std::ostream& log) {
  try {
    auto [n_lat, n_lon] = parse_grid_spec(args.grid);
    const GridPtr grid = Grid::regular(n_lat, n_lon);
    Dataset ds = synth_dataset(args.seed, grid, args.steps);
    save_dataset(ds, args.out);
    write_dataset_manifest(ds, args.out + ".manifest.json");
    json a = {{"grid", args.grid}, {"steps", args.steps}, {"seed", args.seed}, {"threads", args.threads}};
    write_manifest(args.out + ".run.json", "synth", a, {}, {args.out, args.out + ".manifest.json"});
    log << "dataset=" << args.out << " steps=" << ds.n_steps() << " vars=" << ds.n_vars() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return map_error(e, log);
  }
}

int run_graph_build(const GraphBuildArgs& args, std::ostream& log) {
  try {
    auto [n_lat, n_lon] = parse_grid_spec(args.grid);
    const GridPtr grid = Grid::regular(n_lat, n_lon);
    GraphBuildOptions opt;
    opt.kernel_gain = args.gain;
    opt.prune_threshold = args.threshold;
    opt.planar = args.planar;
    SphericalGraph g = build_graph(grid, opt);
    save_graph(g, args.out);
    json a = {{"grid", args.grid}, {"gain", args.gain},       {"threshold", args.threshold},
              {"planar", args.planar}, {"threads", args.threads}};
    write_manifest(args.out + ".run.json", "graph-build", a, {}, {args.out});
    log << "nodes=" << g.n_nodes() << " edges=" << g.n_edges() << " min_degree=" << g.min_row_nonzeros
        << " max_degree=" << g.max_row_nonzeros << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return map_error(e, log);
  }
}

int run_simulate(const SimulateArgs& args, std::ostream& log) {
  try {
    const std::string data_path = resolve_input(args.data);
    Dataset ds = load_dataset(data_path);
    if (args.checkpoint.empty() && !args.zero_model) throw ConfigError("simulate: need --checkpoint or --zero-model");
    GnnModel model = args.zero_model ? GnnModel::init(GnnConfig::desk_size(), 0) : load_checkpoint(resolve_input(args.checkpoint));
    if (args.zero_model)
      for (NamedParam& p : model.params()) p.value.fill(0.0);
    SphericalGraph graph = obtain_graph(resolve_input(args.graph_path), ds.grid, args.gain, args.threshold, args.planar_graph);

    IntegratorConfig icfg;
    icfg.lead_time_hours = args.lead_hours;
    icfg.physics_enabled = !args.no_physics;
    DynamicsParams params;
    params.mu = args.mu;

    const int lead_steps = static_cast<int>(std::round(args.lead_hours / ds.cadence_hours));
    if (std::abs(args.lead_hours - lead_steps * ds.cadence_hours) > 1e-9)
      throw ConfigError("simulate: lead time must be a multiple of the dataset cadence");
    if (args.lead_hours > 144.0) throw ConfigError("simulate: lead time capped at 144 hours");
    int n_inits = ds.n_steps() - lead_steps;
    if (n_inits < 1) throw DataError("simulate: dataset too short for the requested lead time");
    if (args.max_inits > 0) n_inits = std::min(n_inits, args.max_inits);

    fs::create_directories(args.out_dir);
    Trajectory traj;
    traj.grid = ds.grid;
    traj.var_names = ds.var_names;
    traj.stats = ds.stats;
    for (int l = 1; l <= lead_steps; ++l) traj.lead_hours.push_back(l * ds.cadence_hours);
    const FieldSet consts = ds.normalized_constants();
    for (int init = 0; init < n_inits; ++init) {
      RolloutResult res = rollout(ds.normalized_fields(init), consts, model, graph, icfg, params, ds.stats);
      traj.init_steps.push_back(init);
      std::vector<std::vector<Tensor>> per_lead;
      for (int idx : res.six_hourly_indices()) {
        FieldSet phys = denormalize(res.snapshots[idx], ds.stats, ds.var_units);
        std::vector<Tensor> fields;
        for (int v = 0; v < ds.n_vars(); ++v) fields.push_back(phys[v].values);
        per_lead.push_back(std::move(fields));
      }
      if (per_lead.size() != traj.lead_hours.size()) throw NumericError("simulate: snapshot cadence mismatch");
      traj.data.push_back(std::move(per_lead));
    }
    const std::string traj_path = (fs::path(args.out_dir) / "trajectory.bin").string();
    save_trajectory(traj, traj_path);
    json a = {{"data", args.data},         {"checkpoint", args.checkpoint}, {"lead_hours", args.lead_hours},
              {"no_physics", args.no_physics}, {"planar_graph", args.planar_graph}, {"zero_model", args.zero_model},
              {"mu", args.mu},             {"max_inits", args.max_inits},   {"threads", args.threads}};
    std::vector<std::string> inputs = {data_path};
    if (!args.checkpoint.empty()) inputs.push_back(resolve_input(args.checkpoint));
    if (!args.graph_path.empty()) inputs.push_back(resolve_input(args.graph_path));
    write_manifest((fs::path(args.out_dir) / "manifest.json").string(), "simulate", a, inputs, {traj_path});
    log << "inits=" << n_inits << " leads=" << traj.lead_hours.size() << " out=" << traj_path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return map_error(e, log);
  }
}

int run_evaluate(const EvaluateArgs& args, std::ostream& log) {
  try {
    Trajectory traj = load_trajectory(resolve_input(args.pred));
    Dataset ds = load_dataset(resolve_input(args.data));
    if (!traj.grid->same_layout(*ds.grid)) throw DataError("evaluate: prediction/observation grid mismatch");
    Climatology clim = args.clim.empty() ? climatology_from_dataset(ds) : load_climatology(resolve_input(args.clim));
    if (!clim.grid->same_layout(*ds.grid)) throw DataError("evaluate: climatology grid mismatch");

    const int nv = static_cast<int>(traj.var_names.size());
    std::vector<MetricRow> rows;
    for (int v = 0; v < nv; ++v) {
      for (size_t l = 0; l < traj.lead_hours.size(); ++l) {
        const int lead_steps = static_cast<int>(std::round(traj.lead_hours[l] / ds.cadence_hours));
        double sum_rmse = 0.0, sum_acc = 0.0;
        int n = 0;
        for (size_t i = 0; i < traj.init_steps.size(); ++i) {
          const int obs_step = traj.init_steps[i] + lead_steps;
          if (obs_step >= ds.n_steps())
            throw DataError("evaluate: missing observation snapshot at step " + std::to_string(obs_step));
          const UnitsTag tag{ds.var_units[v], 0};
          ScalarField pred(ds.grid, traj.data[i][l][v], tag);
          ScalarField obs(ds.grid, ds.steps[obs_step][v], tag);
          sum_rmse += rmse(pred, obs);
          sum_acc += acc(pred, obs, clim.mean_fields[v]);
          ++n;
        }
        rows.push_back({traj.var_names[v], traj.lead_hours[l], sum_rmse / n, sum_acc / n});
      }
    }
    write_metrics_csv(args.out_csv, rows);
    if (!args.plot_svg.empty()) write_metrics_svg(args.plot_svg, rows);
    json a = {{"pred", args.pred}, {"data", args.data}, {"clim", args.clim}, {"threads", args.threads}};
    std::vector<std::string> inputs = {resolve_input(args.pred), resolve_input(args.data)};
    if (!args.clim.empty()) inputs.push_back(resolve_input(args.clim));
    std::vector<std::string> outputs = {args.out_csv};
    if (!args.plot_svg.empty()) outputs.push_back(args.plot_svg);
    write_manifest(args.out_csv + ".run.json", "evaluate", a, inputs, outputs);
    log << "rows=" << rows.size() << " out=" << args.out_csv << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return map_error(e, log);
  }
}

int run_train(const TrainArgs& args, std::ostream& log) {
  try {
    const std::string data_path = resolve_input(args.data);
    Dataset ds = load_dataset(data_path);
    SphericalGraph graph = obtain_graph(resolve_input(args.graph_path), ds.grid, args.gain, args.threshold, args.planar_graph);

    GnnConfig mcfg = model_config_for(args.model_size);
    GnnModel model = GnnModel::init(mcfg, args.seed);

    TrainConfig tcfg;
    tcfg.epochs = args.epochs;
    tcfg.batch_size = args.batch;
    tcfg.seed = args.seed;
    tcfg.physics_enabled = !args.no_physics;
    tcfg.loss.autoregressive_steps = args.steps_ahead;
    if (!args.config_json.empty()) {
      std::ifstream in(args.config_json);
      if (!in) throw ConfigError("train: cannot open config " + args.config_json);
      json j = json::parse(in);
      if (j.contains("lambda1")) tcfg.loss.lambda1 = j["lambda1"].get<double>();
      if (j.contains("lambda2")) tcfg.loss.lambda2 = j["lambda2"].get<double>();
      if (j.contains("lambda3")) tcfg.loss.lambda3 = j["lambda3"].get<double>();
      if (j.contains("lr_max")) tcfg.optimizer.lr_max = j["lr_max"].get<double>();
      if (j.contains("lr_min")) tcfg.optimizer.lr_min = j["lr_min"].get<double>();
      if (j.contains("weight_decay")) tcfg.optimizer.weight_decay = j["weight_decay"].get<double>();
      if (j.contains("clip_norm")) tcfg.optimizer.clip_norm = j["clip_norm"].get<double>();
      if (j.contains("batch_size")) tcfg.batch_size = j["batch_size"].get<int>();
    }
    DynamicsParams params;
    params.mu = args.mu;

    const int n_samples = ds.n_steps() - tcfg.loss.autoregressive_steps;
    if (n_samples < 1) throw DataError("train: dataset too short for the autoregressive horizon");
    const int steps_per_epoch = (n_samples + tcfg.batch_size - 1) / tcfg.batch_size;
    tcfg.total_steps = std::max<int64_t>(1, static_cast<int64_t>(steps_per_epoch) * tcfg.epochs);

    fs::create_directories(args.out_dir);
    const std::string log_path = (fs::path(args.out_dir) / "train_log.csv").string();
    std::ofstream csv(log_path);
    csv << "epoch,mean_loss_basic,mean_loss_velocity,lr,grad_norm_min,grad_norm_median,grad_norm_max\n";
    csv << std::setprecision(10);

    AdamW opt(model, tcfg.optimizer);
    int64_t global_step = 0;
    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
      EpochStats st = train_epoch(model, ds, graph, opt, tcfg, params, epoch, global_step);
      csv << epoch << "," << st.mean_loss_basic << "," << st.mean_loss_velocity << "," << st.last_lr << ","
          << st.grad_norm_min << "," << st.grad_norm_median << "," << st.grad_norm_max << "\n";
      log << "epoch=" << epoch << " loss_basic=" << st.mean_loss_basic << " loss_velocity=" << st.mean_loss_velocity
          << "\n";
    }
    const std::string ckpt_path = (fs::path(args.out_dir) / "model.ckpt").string();
    save_checkpoint(model, ckpt_path);
    json a = {{"data", args.data},     {"epochs", args.epochs},         {"batch", tcfg.batch_size},
              {"seed", args.seed},     {"steps_ahead", args.steps_ahead}, {"model_size", args.model_size},
              {"no_physics", args.no_physics}, {"planar_graph", args.planar_graph}, {"mu", args.mu},
              {"gain", args.gain},     {"threshold", args.threshold},   {"threads", args.threads}};
    std::vector<std::string> inputs = {data_path};
    if (!args.graph_path.empty()) inputs.push_back(resolve_input(args.graph_path));
    if (!args.config_json.empty()) inputs.push_back(args.config_json);
    write_manifest((fs::path(args.out_dir) / "manifest.json").string(), "train", a, inputs, {ckpt_path, log_path});
    log << "checkpoint=" << ckpt_path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return map_error(e, log);
  }
}

}  // namespace spherecast::cli
