/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include "spherecast/integrator.hpp"

namespace spherecast {

struct LossConfig {
  double lambda1 = 10.0;  // initial-velocity magnitude penalty
  double lambda2 = 1.0;   // theta-smoothness
  double lambda3 = 1.0;   // phi-smoothness
  int autoregressive_steps = 4;  // T_a model steps of 6 h (6/12/18/24 h horizons)
};

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.05;  // decoupled; weight matrices only
  double lr_max = 1e-3;
  double lr_min = 3e-7;
  double clip_norm = 1.0;  // global norm across all parameter gradients
  double eps = 1e-8;
};

// lr(step) = lr_min + (lr_max - lr_min)/2 * (1 + cos(pi * step / total)).
double cosine_lr(int64_t step, int64_t total_steps, double lr_max = 1e-3, double lr_min = 3e-7);

// --- losses ----------------------------------------------------------------

// Mean squared error over grid points, averaged over autoregressive steps,
// then over variables. Normalized fields on both sides.
Var loss_basic_on(Tape& tape, const std::vector<std::vector<Var>>& pred_steps,
                  const std::vector<FieldSet>& obs_steps);
double loss_basic(const std::vector<FieldSet>& pred_steps, const std::vector<FieldSet>& obs_steps);

// Initial-velocity penalty: magnitude plus theta/phi smoothness of the
// velocity components at t = 0, averaged over the variables.
Var loss_velocity_on(Tape& tape, const std::vector<std::pair<Var, Var>>& v0, const GridPtr& grid,
                     const LossConfig& cfg);
double loss_velocity(const std::vector<VelocityField>& v0, const LossConfig& cfg);

// --- optimizer ---------------------------------------------------------------

// Decoupled weight-decay adaptive-moment optimizer with bias-corrected
// moments. The decay multiplies weights by (1 - lr * weight_decay) before
// the moment update is applied (biases exempt).
class AdamW {
 public:
  AdamW(const GnnModel& model, const OptimizerConfig& cfg);

  const OptimizerConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }

  // Scales all gradients so the global L2 norm is at most clip_norm.
  // Returns the pre-clip norm; gradients within the bound are untouched.
  double clip_gradients(GnnModel& model) const;

  void step(GnnModel& model, double lr);

 private:
  OptimizerConfig cfg_;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// --- epoch driver --------------------------------------------------------------

struct TrainConfig {
  LossConfig loss;
  OptimizerConfig optimizer;
  int epochs = 20;
  int batch_size = 2;
  uint64_t seed = 7;
  bool physics_enabled = true;
  double substep_hours = 0.2;
  double interaction_refresh_hours = 1.0;
  int64_t total_steps = 0;  // LR schedule horizon; derived by the caller
};

struct EpochStats {
  int optimizer_steps = 0;
  double mean_loss_basic = 0.0;
  double mean_loss_velocity = 0.0;
  double last_lr = 0.0;
  double grad_norm_min = 0.0;
  double grad_norm_median = 0.0;
  double grad_norm_max = 0.0;
};

// One pass over the dataset: autoregressive rollouts to T_a * 6 hours,
// backpropagation through the unrolled integrator and network, gradient
// clipping and one optimizer step per batch. Deterministic in (seed, epoch).
EpochStats train_epoch(GnnModel& model, const Dataset& dataset, const SphericalGraph& graph, AdamW& opt,
                       const TrainConfig& cfg, const DynamicsParams& params, int epoch_index,
                       int64_t& global_step);

// Loss of one training sample without an optimizer step (evaluation helper).
struct SampleLoss {
  double basic = 0.0;
  double velocity = 0.0;
};
SampleLoss sample_loss(GnnModel& model, const Dataset& dataset, const SphericalGraph& graph,
                       const TrainConfig& cfg, const DynamicsParams& params, int sample_index,
                       bool accumulate_grads, double grad_scale);

}  // namespace spherecast
