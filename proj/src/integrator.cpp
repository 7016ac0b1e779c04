/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/integrator.hpp"

#include <cmath>

namespace spherecast {

void IntegratorConfig::validate() const {
  if (substep_hours <= 0.0) throw ConfigError("IntegratorConfig: substep_hours must be positive");
  const double ratio = interaction_refresh_hours / substep_hours;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
    throw ConfigError("IntegratorConfig: interaction_refresh_hours / substep_hours must be an exact integer");
  if (lead_time_hours <= 0.0) throw ConfigError("IntegratorConfig: lead_time_hours must be positive");
  const double steps = lead_time_hours / interaction_refresh_hours;
  if (std::abs(steps - std::round(steps)) > 1e-9)
    throw ConfigError("IntegratorConfig: lead_time_hours must be a positive multiple of the refresh period");
  if (velocity_clamp <= 0.0) throw ConfigError("IntegratorConfig: velocity_clamp must be positive");
}

int IntegratorConfig::substeps_per_refresh() const {
  return static_cast<int>(std::round(interaction_refresh_hours / substep_hours));
}

namespace {

void throw_nonfinite(const Tensor& t, const std::string& name, int n_lon) {
  const size_t idx = t.worst_index();
  const int r = static_cast<int>(idx) / n_lon;
  const int c = static_cast<int>(idx) % n_lon;
  throw NumericError("non-finite tendency for " + name + " at cell (" + std::to_string(r) + "," +
                     std::to_string(c) + "), value=" + std::to_string(t.data[idx]));
}

}  // namespace

ForecastState euler_step(const ForecastState& state, const Tendencies& tendencies, double dt) {
  if (dt <= 0.0) throw ConfigError("euler_step: dt must be positive");
  const int V = state.fields.size();
  if (static_cast<int>(tendencies.du.size()) != V || static_cast<int>(tendencies.dv_theta.size()) != V ||
      static_cast<int>(tendencies.dv_phi.size()) != V)
    throw DimensionError("euler_step: tendency count != field count");
  ForecastState out = state;
  out.t_hours += dt;
  const int n_lon = state.grid->n_lon();
  for (int v = 0; v < V; ++v) {
    require_same_shape(state.fields[v].values, tendencies.du[v], "euler_step(u)");
    if (!tendencies.du[v].all_finite()) throw_nonfinite(tendencies.du[v], "u[" + std::to_string(v) + "]", n_lon);
    if (!tendencies.dv_theta[v].all_finite())
      throw_nonfinite(tendencies.dv_theta[v], "v_theta[" + std::to_string(v) + "]", n_lon);
    if (!tendencies.dv_phi[v].all_finite())
      throw_nonfinite(tendencies.dv_phi[v], "v_phi[" + std::to_string(v) + "]", n_lon);
    for (size_t i = 0; i < out.fields[v].values.size(); ++i) {
      out.fields[v].values.data[i] += dt * tendencies.du[v].data[i];
      out.velocities[v].v_theta.values.data[i] += dt * tendencies.dv_theta[v].data[i];
      out.velocities[v].v_phi.values.data[i] += dt * tendencies.dv_phi[v].data[i];
    }
  }
  return out;
}

std::vector<int> RolloutResult::six_hourly_indices() const {
  std::vector<int> idx;
  for (size_t i = 0; i < snapshot_hours.size(); ++i) {
    const double h = snapshot_hours[i];
    if (std::abs(h / 6.0 - std::round(h / 6.0)) < 1e-9) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

Rollout::Rollout(const GnnModel& model, const SphericalGraph& graph, const IntegratorConfig& cfg,
                 const DynamicsParams& params, const std::vector<VarStats>& stats, bool training)
    : model_(model), graph_(graph), cfg_(cfg), params_(params), stats_(stats), training_(training) {
  cfg_.validate();
  n_vars_ = model.config().n_vars;
  if (static_cast<int>(stats_.size()) != n_vars_) throw DimensionError("Rollout: stats count != n_vars");
  if (n_vars_ <= kZ500Index) throw DimensionError("Rollout: variable set lacks the geopotential channel");
  tape_.set_recording(training_);
}

void Rollout::require_initialized() const {
  if (!initialized_) throw NumericError("Rollout: not initialized");
}

void Rollout::init(const FieldSet& normalized_fields, const FieldSet& normalized_constants) {
  if (normalized_fields.size() != n_vars_) throw DimensionError("Rollout::init: field count != n_vars");
  const int n = graph_.n_nodes();
  const int nc = normalized_constants.size();
  if (n_vars_ + nc != model_.config().in_channels)
    throw DimensionError("Rollout::init: variables + constants != model input channels");
  const GridPtr& grid = graph_.grid;
  const int R = grid->n_lat(), C = grid->n_lon();
  const int VV = n_vars_;

  const_channels_ = Tensor(n, nc);
  for (int c = 0; c < nc; ++c) {
    require_same_grid(normalized_constants[c].grid, grid, "Rollout::init(constants)");
    if (normalized_constants[c].units.base != Units::Normalized)
      throw DataError("Rollout::init: constants must be normalized");
    for (int k = 0; k < n; ++k) const_channels_.at(k, c) = normalized_constants[c].values.data[k];
  }

  lease_ = lease_params(tape_, model_);
  edge_states_ = tape_.leaf(graph_.edge_features, false);
  u_.resize(VV);
  vt_.assign(VV, Var{});
  vp_.assign(VV, Var{});
  interaction_.assign(VV, Var{});
  for (int v = 0; v < VV; ++v) {
    require_same_grid(normalized_fields[v].grid, grid, "Rollout::init(fields)");
    if (normalized_fields[v].units.base != Units::Normalized)
      throw DataError("Rollout::init: fields must be normalized");
    u_[v] = tape_.leaf(normalized_fields[v].values, false);
  }
  // Velocities start at zero until estimated or supplied.
  for (int v = 0; v < VV; ++v) {
    vt_[v] = tape_.leaf(Tensor(R, C), false);
    vp_[v] = tape_.leaf(Tensor(R, C), false);
  }
  t_hours_ = 0.0;
  counters_ = {};
  snapshots_.clear();
  snapshot_hours_.clear();
  snapshot_vars_.clear();
  v0_vars_.clear();
  initialized_ = true;
  velocities_set_ = false;
}

Var Rollout::node_states_var() {
  const int R = graph_.grid->n_lat(), C = graph_.grid->n_lon();
  std::vector<Var> parts;
  parts.reserve(n_vars_ + 1);
  for (int v = 0; v < n_vars_; ++v) parts.push_back(tape_.reshape(u_[v], R * C, 1));
  parts.push_back(tape_.leaf(const_channels_, false));
  return tape_.concat_cols(parts);
}

void Rollout::estimate_initial_velocity() {
  require_initialized();
  if (velocities_set_) throw NumericError("Rollout: initial velocities already set");
  const int R = graph_.grid->n_lat(), C = graph_.grid->n_lon();
  BackboneOut bb = backbone_on(tape_, model_, lease_, node_states_var(), edge_states_, graph_);
  VelocityBranchOut vel = velocity_branch_on(tape_, model_, lease_, bb, graph_);
  counters_.velocity_branch_calls += 1;
  for (int v = 0; v < n_vars_; ++v) {
    Var vt = tape_.reshape(tape_.slice_cols(vel.clamped, 2 * v, 1), R, C);
    Var vp = tape_.reshape(tape_.slice_cols(vel.clamped, 2 * v + 1, 1), R, C);
    vt_[v] = vt;
    vp_[v] = vp;
    v0_vars_.emplace_back(vt, vp);
  }
  // The backbone output at t=0 also provides the first interaction estimate.
  Var inter = interaction_branch_on(tape_, model_, lease_, bb, graph_);
  counters_.interaction_branch_calls += 1;
  for (int v = 0; v < n_vars_; ++v)
    interaction_[v] = tape_.reshape(tape_.slice_cols(inter, v, 1), R, C);
  velocities_set_ = true;
}

void Rollout::set_initial_velocity(const std::vector<VelocityField>& v) {
  require_initialized();
  if (velocities_set_) throw NumericError("Rollout: initial velocities already set");
  if (static_cast<int>(v.size()) != n_vars_) throw DimensionError("Rollout::set_initial_velocity: count mismatch");
  for (int k = 0; k < n_vars_; ++k) {
    require_same_grid(v[k].grid(), graph_.grid, "Rollout::set_initial_velocity");
    vt_[k] = tape_.leaf(v[k].v_theta.values, false);
    vp_[k] = tape_.leaf(v[k].v_phi.values, false);
  }
  // Interaction defaults to zero until refreshed.
  const int R = graph_.grid->n_lat(), C = graph_.grid->n_lon();
  for (int k = 0; k < n_vars_; ++k) interaction_[k] = tape_.leaf(Tensor(R, C), false);
  velocities_set_ = true;
}

void Rollout::refresh_interaction() {
  require_initialized();
  const int R = graph_.grid->n_lat(), C = graph_.grid->n_lon();
  BackboneOut bb = backbone_on(tape_, model_, lease_, node_states_var(), edge_states_, graph_);
  Var inter = interaction_branch_on(tape_, model_, lease_, bb, graph_);
  counters_.interaction_branch_calls += 1;
  for (int v = 0; v < n_vars_; ++v)
    interaction_[v] = tape_.reshape(tape_.slice_cols(inter, v, 1), R, C);
}

void Rollout::check_tendency_finite(Var v, const std::string& name) const {
  const Tensor& t = tape_.val(v);
  if (!t.all_finite()) throw_nonfinite(t, name, graph_.grid->n_lon());
}

void Rollout::substep() {
  require_initialized();
  if (!velocities_set_) throw NumericError("Rollout: velocities not initialized");
  const GridPtr& grid = graph_.grid;
  const double dt = cfg_.substep_hours;

  // Total tendency of each variable: interaction minus advective derivative.
  std::vector<Var> du(n_vars_);
  for (int v = 0; v < n_vars_; ++v) {
    Var adv = dyn::advective_derivative(tape_, u_[v], vt_[v], vp_[v], grid);
    du[v] = tape_.sub(interaction_[v], adv);
    check_tendency_finite(du[v], "u[" + std::to_string(v) + "]");
  }

  // Momentum tendencies from the current geopotential field, converted from
  // normalized units to model units ((6371 km)^2/hour^2).
  std::vector<Var> dvt(n_vars_), dvp(n_vars_);
  if (cfg_.evolve_velocities) {
    const double z_scale = params_.geopotential_scale * stats_[kZ500Index].std;
    const double z_shift = params_.geopotential_scale * stats_[kZ500Index].mean;
    Var z_model = tape_.affine(u_[kZ500Index], z_scale, z_shift);
    for (int v = 0; v < n_vars_; ++v) {
      auto mt = dyn::navier_stokes(tape_, vt_[v], vp_[v], z_model, grid, params_);
      dvt[v] = mt.dv_theta;
      dvp[v] = mt.dv_phi;
      check_tendency_finite(dvt[v], "v_theta[" + std::to_string(v) + "]");
      check_tendency_finite(dvp[v], "v_phi[" + std::to_string(v) + "]");
    }
  }

  // Euler updates after all tendencies are computed from the pre-update state.
  for (int v = 0; v < n_vars_; ++v) {
    u_[v] = tape_.add_scaled(u_[v], du[v], dt);
    if (cfg_.evolve_velocities) {
      vt_[v] = tape_.add_scaled(vt_[v], dvt[v], dt);
      vp_[v] = tape_.add_scaled(vp_[v], dvp[v], dt);
      if (cfg_.reclamp_each_substep) {
        vt_[v] = tape_.clamp(vt_[v], -cfg_.velocity_clamp, cfg_.velocity_clamp);
        vp_[v] = tape_.clamp(vp_[v], -cfg_.velocity_clamp, cfg_.velocity_clamp);
      }
    }
  }
  counters_.euler_substeps_per_field += 1;
  t_hours_ += dt;
}

FieldSet Rollout::extract_fields() const {
  FieldSet out;
  for (int v = 0; v < n_vars_; ++v)
    out.fields.emplace_back(graph_.grid, tape_.val(u_[v]), UnitsTag{Units::Normalized, 0});
  return out;
}

void Rollout::record_snapshot(double hour) {
  snapshot_hours_.push_back(hour);
  if (training_) {
    snapshot_vars_.push_back(u_);
  } else {
    FieldSet f = extract_fields();
    if (snapshot_sink) snapshot_sink(hour, f);
    if (keep_snapshots) snapshots_.push_back(std::move(f));
  }
}

void Rollout::reset_tape_between_hours() {
  // Inference only: pull state values out, drop the tape, re-leaf.
  std::vector<Tensor> u(n_vars_), vt(n_vars_), vp(n_vars_);
  for (int v = 0; v < n_vars_; ++v) {
    u[v] = tape_.val(u_[v]);
    vt[v] = tape_.val(vt_[v]);
    vp[v] = tape_.val(vp_[v]);
  }
  tape_.clear();
  lease_ = lease_params(tape_, model_);
  edge_states_ = tape_.leaf(graph_.edge_features, false);
  for (int v = 0; v < n_vars_; ++v) {
    u_[v] = tape_.leaf(std::move(u[v]), false);
    vt_[v] = tape_.leaf(std::move(vt[v]), false);
    vp_[v] = tape_.leaf(std::move(vp[v]), false);
    interaction_[v] = Var{};
  }
}

RolloutResult Rollout::run() {
  require_initialized();
  RolloutResult result;
  if (!cfg_.physics_enabled) {
    // End-to-end ablation: backbone + interaction branch predict the 6 h
    // field delta directly, dynamics skipped.
    const double step_hours = 6.0;
    const double steps = cfg_.lead_time_hours / step_hours;
    if (std::abs(steps - std::round(steps)) > 1e-9)
      throw ConfigError("Rollout: no-physics lead time must be a multiple of 6 hours");
    const int R = graph_.grid->n_lat(), C = graph_.grid->n_lon();
    for (int s = 0; s < static_cast<int>(std::round(steps)); ++s) {
      BackboneOut bb = backbone_on(tape_, model_, lease_, node_states_var(), edge_states_, graph_);
      Var delta = interaction_branch_on(tape_, model_, lease_, bb, graph_);
      counters_.interaction_branch_calls += 1;
      for (int v = 0; v < n_vars_; ++v)
        u_[v] = tape_.add(u_[v], tape_.reshape(tape_.slice_cols(delta, v, 1), R, C));
      record_snapshot((s + 1) * step_hours);
      if (!training_ && s + 1 < static_cast<int>(std::round(steps))) reset_tape_between_hours();
    }
  } else {
    const int hours = static_cast<int>(std::round(cfg_.lead_time_hours / cfg_.interaction_refresh_hours));
    const int substeps = cfg_.substeps_per_refresh();
    for (int z = 0; z < hours; ++z) {
      if (z == 0) {
        if (!velocities_set_) estimate_initial_velocity();
      } else {
        refresh_interaction();
      }
      if (z == 0) {
        for (int v = 0; v < n_vars_; ++v) {
          const UnitsTag vu{Units::ModelUnits, 0};
          result.initial_velocities.emplace_back(ScalarField(graph_.grid, tape_.val(vt_[v]), vu),
                                                 ScalarField(graph_.grid, tape_.val(vp_[v]), vu));
        }
      }
      for (int s = 0; s < substeps; ++s) substep();
      record_snapshot((z + 1) * cfg_.interaction_refresh_hours);
      if (!training_ && z + 1 < hours) reset_tape_between_hours();
    }
  }
  result.snapshot_hours = snapshot_hours_;
  result.snapshots = std::move(snapshots_);
  result.counters = counters_;
  return result;
}

RolloutResult rollout(const FieldSet& initial_normalized, const FieldSet& normalized_constants,
                      const GnnModel& model, const SphericalGraph& graph, const IntegratorConfig& cfg,
                      const DynamicsParams& params, const std::vector<VarStats>& stats) {
  Rollout r(model, graph, cfg, params, stats, /*training=*/false);
  r.init(initial_normalized, normalized_constants);
  RolloutResult res = r.run();
  return res;
}

}  // namespace spherecast
