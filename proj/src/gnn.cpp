/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/gnn.hpp"

#include <cmath>

#include <json.hpp>

#include "spherecast/binio.hpp"

namespace spherecast {

using nlohmann::json;

std::string GnnConfig::to_json() const {
  json j;
  j["in_channels"] = in_channels;
  j["n_vars"] = n_vars;
  j["edge_dim"] = edge_dim;
  j["embed_width"] = embed_width;
  j["backbone_widths"] = backbone_widths;
  j["velocity_widths"] = velocity_widths;
  j["interaction_widths"] = interaction_widths;
  j["leaky_slope"] = leaky_slope;
  j["velocity_clamp"] = velocity_clamp;
  j["use_smooth_clamp"] = use_smooth_clamp;
  return j.dump();
}

GnnConfig GnnConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  GnnConfig c;
  c.in_channels = j.at("in_channels").get<int>();
  c.n_vars = j.at("n_vars").get<int>();
  c.edge_dim = j.at("edge_dim").get<int>();
  c.embed_width = j.at("embed_width").get<int>();
  c.backbone_widths = j.at("backbone_widths").get<std::vector<int>>();
  c.velocity_widths = j.at("velocity_widths").get<std::vector<int>>();
  c.interaction_widths = j.at("interaction_widths").get<std::vector<int>>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.velocity_clamp = j.at("velocity_clamp").get<double>();
  c.use_smooth_clamp = j.at("use_smooth_clamp").get<bool>();
  return c;
}

std::vector<LayerSpec> layer_specs(const GnnConfig& cfg) {
  std::vector<LayerSpec> specs;
  specs.push_back({"embed", cfg.in_channels, cfg.embed_width});
  auto add_block = [&](const std::string& prefix, int node_in, int out) {
    specs.push_back({prefix + ".edge", cfg.edge_dim + 2 * node_in, cfg.edge_dim});
    specs.push_back({prefix + ".node", node_in + cfg.edge_dim, out});
    specs.push_back({prefix + ".aggr", 2 * out, out});
    return out;
  };
  int w = cfg.embed_width;
  for (size_t b = 0; b < cfg.backbone_widths.size(); ++b)
    w = add_block("backbone." + std::to_string(b), w, cfg.backbone_widths[b]);
  int vw = w;
  for (size_t b = 0; b < cfg.velocity_widths.size(); ++b)
    vw = add_block("velocity." + std::to_string(b), vw, cfg.velocity_widths[b]);
  specs.push_back({"velocity.head", vw, 2 * cfg.n_vars});
  int iw = w;
  for (size_t b = 0; b < cfg.interaction_widths.size(); ++b)
    iw = add_block("interaction." + std::to_string(b), iw, cfg.interaction_widths[b]);
  specs.push_back({"interaction.head", iw, cfg.n_vars});
  return specs;
}

size_t parameter_count(const GnnConfig& cfg) {
  size_t n = 0;
  for (const LayerSpec& s : layer_specs(cfg)) n += static_cast<size_t>(s.in + 1) * s.out;
  return n;
}

GnnModel GnnModel::init(const GnnConfig& cfg, uint64_t seed) {
  GnnModel m;
  m.cfg_ = cfg;
  Rng rng(seed);
  for (const LayerSpec& s : layer_specs(cfg)) {
    NamedParam w;
    w.name = s.name + ".W";
    w.value = Tensor(s.in, s.out);
    w.is_weight = true;
    const double bound = std::sqrt(6.0 / (s.in + s.out));
    for (double& v : w.value.data) v = rng.uniform(-bound, bound);
    // Branch heads start at zero so an untrained model predicts zero
    // tendencies and zero initial velocities; a randomly initialized
    // interaction output feeds the pressure terms and drives the coupled
    // integrator into finite-time blow-up through the curvature terms.
    if (s.name == "velocity.head" || s.name == "interaction.head") w.value.fill(0.0);
    m.params_.push_back(std::move(w));
    NamedParam b;
    b.name = s.name + ".b";
    b.value = Tensor(1, s.out);
    b.is_weight = false;
    m.params_.push_back(std::move(b));
  }
  return m;
}

NamedParam& GnnModel::param(const std::string& name) {
  for (NamedParam& p : params_)
    if (p.name == name) return p;
  throw DimensionError("GnnModel: no parameter named " + name);
}

const NamedParam& GnnModel::param(const std::string& name) const {
  return const_cast<GnnModel*>(this)->param(name);
}

void GnnModel::zero_grads() {
  for (NamedParam& p : params_) {
    if (p.grad.size() == 0) p.grad = Tensor(p.value.rows, p.value.cols);
    p.grad.fill(0.0);
  }
}

uint64_t GnnModel::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const NamedParam& p : params_) {
    h = fnv1a64(p.name.data(), p.name.size(), h);
    h = fnv1a64(p.value.data.data(), p.value.data.size() * sizeof(double), h);
  }
  return h;
}

NodeEdgeState init_states(const FieldSet& fields, const FieldSet& constants, const SphericalGraph& graph) {
  const int n = graph.n_nodes();
  const int nf = fields.size(), nc = constants.size();
  NodeEdgeState st;
  st.node_states = Tensor(n, nf + nc);
  auto place = [&](const ScalarField& f, int channel, const char* what) {
    if (f.units.base != Units::Normalized || f.units.per_radian != 0)
      throw DataError(std::string("init_states: ") + what + " channel " + std::to_string(channel) +
                      " is not normalized (units tag " + units_name(f.units.base) + ")");
    if (f.values.rows * f.values.cols != n) throw DimensionError("init_states: field size != node count");
    for (int k = 0; k < n; ++k) st.node_states.at(k, channel) = f.values.data[k];
  };
  for (int i = 0; i < nf; ++i) place(fields[i], i, "variable");
  for (int i = 0; i < nc; ++i) place(constants[i], nf + i, "constant");
  st.edge_states = graph.edge_features;
  return st;
}

ParamLease lease_params(Tape& tape, const GnnModel& model) {
  ParamLease lease;
  lease.vars.reserve(model.params().size());
  for (const NamedParam& p : model.params()) lease.vars.push_back(tape.leaf(p.value, true));
  return lease;
}

void pull_param_grads(Tape& tape, const ParamLease& lease, GnnModel& model, double scale) {
  auto& params = model.params();
  if (lease.vars.size() != params.size()) throw DimensionError("pull_param_grads: lease size mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].grad.size() == 0) params[i].grad = Tensor(params[i].value.rows, params[i].value.cols);
    const Tensor& g = tape.grad(lease.vars[i]);
    if (g.size() == 0) continue;  // unreached parameter
    for (size_t k = 0; k < g.size(); ++k) params[i].grad.data[k] += scale * g.data[k];
  }
}

namespace {

// Dense layer + activation; `layer` is the index into layer_specs order.
Var dense_act(Tape& t, const ParamLease& lease, size_t layer, Var x, double slope) {
  Var w = lease.vars[2 * layer];
  Var b = lease.vars[2 * layer + 1];
  return t.leaky_relu(t.add_bias(t.matmul(x, w), b), slope);
}

Var dense_linear(Tape& t, const ParamLease& lease, size_t layer, Var x) {
  Var w = lease.vars[2 * layer];
  Var b = lease.vars[2 * layer + 1];
  return t.add_bias(t.matmul(x, w), b);
}

}  // namespace

std::pair<Var, Var> basic_block_on(Tape& t, const GnnModel& model, const ParamLease& lease, size_t layer0,
                                   Var h, Var e, const SphericalGraph& graph) {
  const double slope = model.config().leaky_slope;
  // 1. node-edge connection: edge update
  Var h_src = t.gather_rows(h, graph.edge_src);
  Var h_dst = t.gather_rows(h, graph.edge_dst);
  const Var ecat_parts[] = {e, h_src, h_dst};
  Var e_new = dense_act(t, lease, layer0, t.concat_cols(ecat_parts), slope);
  // 2. node-edge connection: node update with incident-edge sums
  Var sum_src = t.scatter_add_rows(e_new, graph.edge_src, graph.n_nodes());
  Var sum_both = t.add(t.scatter_add_rows(e_new, graph.edge_dst, graph.n_nodes()), sum_src);
  const Var ncat_parts[] = {h, sum_both};
  Var h1 = dense_act(t, lease, layer0 + 1, t.concat_cols(ncat_parts), slope);
  // 3. node-node aggregation (graph convolution)
  Var agg = t.spmm(graph.adjacency, h1);
  const Var acat_parts[] = {h1, agg};
  Var h2 = dense_act(t, lease, layer0 + 2, t.concat_cols(acat_parts), slope);
  return {h2, e_new};
}

BackboneOut backbone_on(Tape& t, const GnnModel& model, const ParamLease& lease, Var node_states,
                        Var edge_states, const SphericalGraph& graph) {
  const GnnConfig& cfg = model.config();
  if (t.val(node_states).rows != graph.n_nodes() || t.val(node_states).cols != cfg.in_channels)
    throw DimensionError("backbone_on: node state shape mismatch");
  if (t.val(edge_states).rows != graph.n_edges() || t.val(edge_states).cols != cfg.edge_dim)
    throw DimensionError("backbone_on: edge state shape mismatch");
  for (const NamedParam& p : model.params())
    if (!p.value.all_finite()) throw NumericError("backbone_on: non-finite parameter " + p.name);

  size_t layer = 0;
  Var h = dense_act(t, lease, layer++, node_states, cfg.leaky_slope);
  Var e = edge_states;
  for (size_t b = 0; b < cfg.backbone_widths.size(); ++b) {
    std::tie(h, e) = basic_block_on(t, model, lease, layer, h, e, graph);
    layer += 3;
  }
  return {h, e};
}

VelocityBranchOut velocity_branch_on(Tape& t, const GnnModel& model, const ParamLease& lease,
                                     const BackboneOut& bb, const SphericalGraph& graph) {
  const GnnConfig& cfg = model.config();
  size_t layer = 1 + 3 * cfg.backbone_widths.size();
  Var h = bb.h, e = bb.e;
  for (size_t b = 0; b < cfg.velocity_widths.size(); ++b) {
    std::tie(h, e) = basic_block_on(t, model, lease, layer, h, e, graph);
    layer += 3;
  }
  VelocityBranchOut out;
  out.raw = dense_linear(t, lease, layer, h);
  out.clamped = cfg.use_smooth_clamp ? t.smooth_clamp(out.raw, cfg.velocity_clamp)
                                     : t.clamp(out.raw, -cfg.velocity_clamp, cfg.velocity_clamp);
  return out;
}

Var interaction_branch_on(Tape& t, const GnnModel& model, const ParamLease& lease, const BackboneOut& bb,
                          const SphericalGraph& graph) {
  const GnnConfig& cfg = model.config();
  size_t layer = 1 + 3 * (cfg.backbone_widths.size() + cfg.velocity_widths.size()) + 1;
  Var h = bb.h, e = bb.e;
  for (size_t b = 0; b < cfg.interaction_widths.size(); ++b) {
    std::tie(h, e) = basic_block_on(t, model, lease, layer, h, e, graph);
    layer += 3;
  }
  return dense_linear(t, lease, layer, h);
}

GnnOutputs forward_on(Tape& t, const GnnModel& model, const ParamLease& lease, Var node_states,
                      Var edge_states, const SphericalGraph& graph) {
  BackboneOut bb = backbone_on(t, model, lease, node_states, edge_states, graph);
  VelocityBranchOut vel = velocity_branch_on(t, model, lease, bb, graph);
  GnnOutputs out;
  out.velocity_raw = vel.raw;
  out.velocity = vel.clamped;
  out.interaction = interaction_branch_on(t, model, lease, bb, graph);
  return out;
}

GnnForward gnn_forward(const GnnModel& model, const NodeEdgeState& state, const SphericalGraph& graph) {
  GnnForward f;
  f.lease = lease_params(f.tape, model);
  f.node_input = f.tape.leaf(state.node_states, true);
  f.edge_input = f.tape.leaf(state.edge_states, false);
  f.out = forward_on(f.tape, model, f.lease, f.node_input, f.edge_input, graph);
  return f;
}

GnnGradients gnn_backward(GnnForward& fwd, const GnnModel& model, const Tensor& velocity_grad,
                          const Tensor& interaction_grad) {
  if (fwd.consumed) throw NumericError("gnn_backward: no cached forward (already consumed)");
  fwd.consumed = true;
  const std::pair<Var, Tensor> seeds[] = {{fwd.out.velocity, velocity_grad}, {fwd.out.interaction, interaction_grad}};
  fwd.tape.backward_seeded(seeds);
  GnnGradients g;
  g.param_grads.reserve(model.params().size());
  for (size_t i = 0; i < model.params().size(); ++i) {
    Tensor t = fwd.tape.grad(fwd.lease.vars[i]);
    if (t.size() == 0) t = Tensor(model.params()[i].value.rows, model.params()[i].value.cols);
    g.param_grads.push_back(std::move(t));
  }
  g.input_grads = fwd.tape.grad(fwd.node_input);
  return g;
}

// --- checkpoint io --------------------------------------------------------

namespace {
constexpr char kCkptMagic[9] = "SCCKP01\0";
}

void save_checkpoint(const GnnModel& model, const std::string& path) {
  json manifest;
  manifest["format"] = "f64le";
  manifest["config"] = json::parse(model.config().to_json());
  json tensors = json::array();
  for (const NamedParam& p : model.params())
    tensors.push_back({{"name", p.name}, {"rows", p.value.rows}, {"cols", p.value.cols}});
  manifest["tensors"] = tensors;
  const std::string mtext = manifest.dump(2);

  binio::Writer w(path);
  w.magic(kCkptMagic);
  w.str(mtext);
  for (const NamedParam& p : model.params())
    for (double v : p.value.data) w.f64(v);
  if (!w.good()) throw DataError("save_checkpoint: write failed: " + path);

  std::ofstream side(path + ".json");
  side << mtext << "\n";
}

GnnModel load_checkpoint(const std::string& path) {
  binio::Reader r(path);
  r.expect_magic(kCkptMagic);
  json manifest = json::parse(r.str(1u << 20));
  GnnModel model = GnnModel::init(GnnConfig::from_json(manifest.at("config").dump()), 0);
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != model.params().size()) throw DataError("load_checkpoint: tensor count mismatch");
  for (size_t i = 0; i < model.params().size(); ++i) {
    NamedParam& p = model.params()[i];
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != p.name || t.at("rows").get<int>() != p.value.rows ||
        t.at("cols").get<int>() != p.value.cols)
      throw DataError("load_checkpoint: manifest mismatch at tensor " + p.name);
    for (double& v : p.value.data) v = r.f64();
  }
  return model;
}

}  // namespace spherecast
