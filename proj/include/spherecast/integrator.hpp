/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <functional>

#include "spherecast/data_io.hpp"
#include "spherecast/dynamics.hpp"
#include "spherecast/gnn.hpp"

namespace spherecast {

struct IntegratorConfig {
  double substep_hours = 0.2;
  double interaction_refresh_hours = 1.0;
  double lead_time_hours = 6.0;
  double velocity_clamp = 0.005;
  bool physics_enabled = true;
  // Velocities evolve under the momentum equations by default; freezing them
  // turns the rollout into pure advection (test/experiment hook).
  bool evolve_velocities = true;
  // The clamp applies to the initial velocity estimate only; optional
  // re-clamping per substep is a stability experiment, off by default.
  bool reclamp_each_substep = false;

  void validate() const;
  int substeps_per_refresh() const;  // 5 for the defaults
};

// Prognostic state at a point in time: normalized variable fields, one
// velocity pair per variable, and the cached interaction tendency.
struct ForecastState {
  double t_hours = 0.0;
  GridPtr grid;
  FieldSet fields;                        // normalized
  std::vector<VelocityField> velocities;  // per variable
  FieldSet interaction;                   // cached per-variable tendency (may be empty)
};

struct Tendencies {
  std::vector<Tensor> du;
  std::vector<Tensor> dv_theta;
  std::vector<Tensor> dv_phi;
};

// One explicit Euler update x <- x + dt * dx/dt of every prognostic field.
// A non-finite tendency aborts with a NumericError naming the field and the
// worst cell.
ForecastState euler_step(const ForecastState& state, const Tendencies& tendencies, double dt);

struct RolloutCounters {
  int velocity_branch_calls = 0;
  int interaction_branch_calls = 0;
  int euler_substeps_per_field = 0;
};

struct RolloutResult {
  std::vector<double> snapshot_hours;  // whole hours (physics) or 6 h steps (no-physics)
  std::vector<FieldSet> snapshots;     // normalized fields
  RolloutCounters counters;
  std::vector<VelocityField> initial_velocities;

  // Indices of snapshots on the 6-hour cadence.
  std::vector<int> six_hourly_indices() const;
};

// Drives one forecast. In training mode every operation is recorded on one
// tape so a loss on the snapshots differentiates through the whole unrolled
// integration; in inference mode the tape is reset every refresh interval to
// bound memory. A snapshot sink, when set, streams snapshots out instead of
// (or in addition to) accumulating them.
class Rollout {
 public:
  Rollout(const GnnModel& model, const SphericalGraph& graph, const IntegratorConfig& cfg,
          const DynamicsParams& params, const std::vector<VarStats>& stats, bool training);

  Tape& tape() { return tape_; }
  const ParamLease& lease() const { return lease_; }
  const RolloutCounters& counters() const { return counters_; }

  void init(const FieldSet& normalized_fields, const FieldSet& normalized_constants);
  // f_vel through the model; exactly one call per rollout.
  void estimate_initial_velocity();
  // Externally supplied initial velocities (experiments and oracles).
  void set_initial_velocity(const std::vector<VelocityField>& v);
  // f_int from the current fields; keeps the estimate until the next refresh.
  void refresh_interaction();
  // One Euler substep of all prognostic fields.
  void substep();
  // Full run over cfg.lead_time_hours: hourly interaction refresh, one-time
  // velocity estimate, five Euler substeps per hour.
  RolloutResult run();

  // Training-mode accessors (Vars on the shared tape).
  const std::vector<Var>& field_vars() const { return u_; }
  const std::vector<Var>& v_theta_vars() const { return vt_; }
  const std::vector<Var>& v_phi_vars() const { return vp_; }
  // Clamped initial-velocity component Vars, grid-shaped, per variable.
  const std::vector<std::pair<Var, Var>>& initial_velocity_vars() const { return v0_vars_; }
  // Snapshot Vars per recorded hour (training mode keeps all of them valid).
  const std::vector<std::vector<Var>>& snapshot_vars() const { return snapshot_vars_; }
  const std::vector<double>& snapshot_hours() const { return snapshot_hours_; }

  std::function<void(double hour, const FieldSet&)> snapshot_sink;
  bool keep_snapshots = true;

 private:
  void require_initialized() const;
  Var node_states_var();
  FieldSet extract_fields() const;
  void reset_tape_between_hours();
  void record_snapshot(double hour);
  void check_tendency_finite(Var v, const std::string& name) const;

  const GnnModel& model_;
  const SphericalGraph& graph_;
  IntegratorConfig cfg_;
  DynamicsParams params_;
  std::vector<VarStats> stats_;
  bool training_ = false;

  Tape tape_;
  ParamLease lease_;
  Var edge_states_{};
  Tensor const_channels_;  // n_nodes x n_consts, normalized
  int n_vars_ = 0;
  std::vector<Var> u_, vt_, vp_, interaction_;
  std::vector<std::pair<Var, Var>> v0_vars_;
  bool initialized_ = false;
  bool velocities_set_ = false;
  double t_hours_ = 0.0;
  RolloutCounters counters_;
  std::vector<double> snapshot_hours_;
  std::vector<FieldSet> snapshots_;
  std::vector<std::vector<Var>> snapshot_vars_;
};

// Inference-mode convenience wrapper: initial velocity from the model,
// hourly snapshots (6-hourly for the no-physics wiring).
RolloutResult rollout(const FieldSet& initial_normalized, const FieldSet& normalized_constants,
                      const GnnModel& model, const SphericalGraph& graph, const IntegratorConfig& cfg,
                      const DynamicsParams& params, const std::vector<VarStats>& stats);

}  // namespace spherecast
