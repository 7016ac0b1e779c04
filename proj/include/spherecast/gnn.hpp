/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <string>

#include "spherecast/graph.hpp"
#include "spherecast/tape.hpp"

namespace spherecast {

// Architecture of the spherical graph network: a dense input embedding, a
// backbone of basic blocks, a velocity branch (head -> 2 * n_vars channels,
// hard-clamped) and an interaction branch (head -> n_vars channels).
//
// A basic block runs, in order:
//   1. edge update:  e <- act(W_e [e, h_src, h_dst] + b_e), back to edge width
//   2. node update:  h <- act(W_n [h, sum of incident e] + b_n), to block width
//   3. aggregation:  h <- act(W_a [h, A h] + b_a), to block width
// Edge states are threaded through blocks at their native width (3 geometric
// features); undirected edges contribute their state to both endpoints.
struct GnnConfig {
  int in_channels = 7;  // 5 variables + land-sea mask + orography
  int n_vars = 5;
  int edge_dim = 3;
  int embed_width = 48;
  std::vector<int> backbone_widths = {48, 48};
  std::vector<int> velocity_widths = {48};
  std::vector<int> interaction_widths = {48, 48, 24};
  double leaky_slope = 0.01;
  double velocity_clamp = 0.005;
  bool use_smooth_clamp = false;  // 0.005 * tanh(x / 0.005) instead of a hard clip

  static GnnConfig paper_size() { return {}; }
  static GnnConfig desk_size() {
    GnnConfig c;
    c.embed_width = 16;
    c.backbone_widths = {16, 16};
    c.velocity_widths = {16};
    c.interaction_widths = {16, 16, 8};
    return c;
  }

  std::string to_json() const;
  static GnnConfig from_json(const std::string& text);
  bool operator==(const GnnConfig&) const = default;
};

// One dense layer of the enumeration; parameters are W [in x out] plus
// b [1 x out], so each layer holds (in + 1) * out scalars.
struct LayerSpec {
  std::string name;
  int in = 0;
  int out = 0;
};

std::vector<LayerSpec> layer_specs(const GnnConfig& cfg);
size_t parameter_count(const GnnConfig& cfg);

struct NamedParam {
  std::string name;
  Tensor value;
  Tensor grad;
  bool is_weight = true;  // weight matrices get weight decay, biases do not
};

class GnnModel {
 public:
  // Glorot-uniform weights, zero biases, deterministic in the seed.
  static GnnModel init(const GnnConfig& cfg, uint64_t seed);

  const GnnConfig& config() const { return cfg_; }
  std::vector<NamedParam>& params() { return params_; }
  const std::vector<NamedParam>& params() const { return params_; }
  NamedParam& param(const std::string& name);
  const NamedParam& param(const std::string& name) const;
  size_t parameter_count() const { return spherecast::parameter_count(cfg_); }
  void zero_grads();
  // FNV-1a hash over all parameter bytes (determinism checks).
  uint64_t content_hash() const;

 private:
  GnnConfig cfg_;
  std::vector<NamedParam> params_;
};

// Node and edge hidden states bound to a graph.
struct NodeEdgeState {
  Tensor node_states;  // n_nodes x d
  Tensor edge_states;  // n_edges x d_e
};

// Initial states: per node the 5 normalized variables followed by the 2
// normalized static constants; per edge the stored geometric features.
// Throws DataError if any input field is not tagged Normalized.
NodeEdgeState init_states(const FieldSet& fields, const FieldSet& constants, const SphericalGraph& graph);

// Parameters leased onto a tape (leaf per parameter, in model order).
struct ParamLease {
  std::vector<Var> vars;
};
ParamLease lease_params(Tape& tape, const GnnModel& model);
// Accumulates tape gradients back into the model's grad buffers.
void pull_param_grads(Tape& tape, const ParamLease& lease, GnnModel& model, double scale = 1.0);

struct GnnOutputs {
  Var velocity_raw;  // n_nodes x 2*n_vars, before the clamp
  Var velocity;      // after the clamp; channel 2k = v_theta, 2k+1 = v_phi of variable k
  Var interaction;   // n_nodes x n_vars, normalized units per hour
};

// Full forward pass on an existing tape: embed -> backbone -> both branches.
GnnOutputs forward_on(Tape& tape, const GnnModel& model, const ParamLease& lease, Var node_states,
                      Var edge_states, const SphericalGraph& graph);

// Branch-level pieces, for callers that need the velocity branch only once
// while the interaction branch runs every refresh (the integrator loop shape).
struct BackboneOut {
  Var h;
  Var e;
};
BackboneOut backbone_on(Tape& tape, const GnnModel& model, const ParamLease& lease, Var node_states,
                        Var edge_states, const SphericalGraph& graph);
struct VelocityBranchOut {
  Var raw;
  Var clamped;
};
VelocityBranchOut velocity_branch_on(Tape& tape, const GnnModel& model, const ParamLease& lease,
                                     const BackboneOut& bb, const SphericalGraph& graph);
Var interaction_branch_on(Tape& tape, const GnnModel& model, const ParamLease& lease, const BackboneOut& bb,
                          const SphericalGraph& graph);

// One basic block on an existing tape; `layer0` indexes the block's three
// dense layers inside the lease. Exposed for block-level tests.
std::pair<Var, Var> basic_block_on(Tape& tape, const GnnModel& model, const ParamLease& lease, size_t layer0,
                                   Var h, Var e, const SphericalGraph& graph);

// --- standalone forward/backward (cached-state API) ----------------------

struct GnnForward {
  Tape tape;
  ParamLease lease;
  Var node_input;
  Var edge_input;
  GnnOutputs out;
  bool consumed = false;

  const Tensor& velocity() const { return tape.val(out.velocity); }
  const Tensor& interaction() const { return tape.val(out.interaction); }
};

GnnForward gnn_forward(const GnnModel& model, const NodeEdgeState& state, const SphericalGraph& graph);

struct GnnGradients {
  std::vector<Tensor> param_grads;  // aligned with model.params()
  Tensor input_grads;               // d loss / d node_states
};

// Exact reverse-mode gradients from output cotangents. A forward can be
// consumed once; a second call throws NumericError.
GnnGradients gnn_backward(GnnForward& fwd, const GnnModel& model, const Tensor& velocity_grad,
                          const Tensor& interaction_grad);

// --- checkpoint io --------------------------------------------------------
// Binary container of (name, shape, f64 little-endian data) with an embedded
// JSON manifest of the architecture; a readable sidecar manifest is written
// next to the checkpoint. Loading validates every shape against the manifest.
void save_checkpoint(const GnnModel& model, const std::string& path);
GnnModel load_checkpoint(const std::string& path);

}  // namespace spherecast
