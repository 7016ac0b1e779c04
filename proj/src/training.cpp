/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spherecast {

double cosine_lr(int64_t step, int64_t total_steps, double lr_max, double lr_min) {
  if (total_steps <= 0) throw ConfigError("cosine_lr: total_steps must be positive");
  if (step < 0 || step > total_steps) throw ConfigError("cosine_lr: step out of range");
  if (step == 0) return lr_max;            // endpoints are exact
  if (step == total_steps) return lr_min;
  const double x = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * x));
}

Var loss_basic_on(Tape& tape, const std::vector<std::vector<Var>>& pred_steps,
                  const std::vector<FieldSet>& obs_steps) {
  if (pred_steps.size() != obs_steps.size() || pred_steps.empty())
    throw DimensionError("loss_basic: horizon mismatch");
  const size_t T = pred_steps.size();
  const size_t V = pred_steps[0].size();
  Var total = tape.leaf(Tensor(1, 1), false);
  for (size_t s = 0; s < T; ++s) {
    if (pred_steps[s].size() != V || static_cast<size_t>(obs_steps[s].size()) != V)
      throw DimensionError("loss_basic: variable count mismatch");
    for (size_t v = 0; v < V; ++v) {
      Var obs = tape.leaf(obs_steps[s][v].values, false);
      Var diff = tape.sub(pred_steps[s][v], obs);
      total = tape.add(total, tape.mean(tape.square(diff)));
    }
  }
  return tape.scale(total, 1.0 / static_cast<double>(T * V));
}

double loss_basic(const std::vector<FieldSet>& pred_steps, const std::vector<FieldSet>& obs_steps) {
  Tape tape;
  tape.set_recording(false);
  std::vector<std::vector<Var>> pred(pred_steps.size());
  for (size_t s = 0; s < pred_steps.size(); ++s)
    for (int v = 0; v < pred_steps[s].size(); ++v) pred[s].push_back(tape.leaf(pred_steps[s][v].values, false));
  return tape.scalar(loss_basic_on(tape, pred, obs_steps));
}

Var loss_velocity_on(Tape& tape, const std::vector<std::pair<Var, Var>>& v0, const GridPtr& grid,
                     const LossConfig& cfg) {
  if (v0.empty()) throw DimensionError("loss_velocity: no velocity fields");
  Var total = tape.leaf(Tensor(1, 1), false);
  for (const auto& [vt, vp] : v0) {
    Var l1 = tape.add(tape.mean(tape.square(vt)), tape.mean(tape.square(vp)));
    Var l2 = tape.add(tape.mean(tape.square(tape.dd_theta(vt, grid))),
                      tape.mean(tape.square(tape.dd_theta(vp, grid))));
    Var l3 = tape.add(tape.mean(tape.square(tape.dd_phi(vt, grid))),
                      tape.mean(tape.square(tape.dd_phi(vp, grid))));
    Var term = tape.scale(l1, 0.5 * cfg.lambda1);
    term = tape.add(term, tape.scale(l2, 0.5 * cfg.lambda2));
    term = tape.add(term, tape.scale(l3, 0.5 * cfg.lambda3));
    total = tape.add(total, term);
  }
  return tape.scale(total, 1.0 / static_cast<double>(v0.size()));
}

double loss_velocity(const std::vector<VelocityField>& v0, const LossConfig& cfg) {
  if (v0.empty()) throw DimensionError("loss_velocity: no velocity fields");
  Tape tape;
  tape.set_recording(false);
  std::vector<std::pair<Var, Var>> vars;
  for (const VelocityField& v : v0)
    vars.emplace_back(tape.leaf(v.v_theta.values, false), tape.leaf(v.v_phi.values, false));
  return tape.scalar(loss_velocity_on(tape, vars, v0[0].grid(), cfg));
}

AdamW::AdamW(const GnnModel& model, const OptimizerConfig& cfg) : cfg_(cfg) {
  for (const NamedParam& p : model.params()) {
    m_.emplace_back(p.value.rows, p.value.cols);
    v_.emplace_back(p.value.rows, p.value.cols);
  }
}

double AdamW::clip_gradients(GnnModel& model) const {
  double norm2 = 0.0;
  for (const NamedParam& p : model.params())
    for (double g : p.grad.data) norm2 += g * g;
  const double norm = std::sqrt(norm2);
  if (norm > cfg_.clip_norm) {
    const double scale = cfg_.clip_norm / norm;
    for (NamedParam& p : model.params())
      for (double& g : p.grad.data) g *= scale;
  }
  return norm;
}

void AdamW::step(GnnModel& model, double lr) {
  auto& params = model.params();
  if (params.size() != m_.size()) throw DimensionError("AdamW::step: model/optimizer mismatch");
  t_ += 1;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    NamedParam& p = params[i];
    if (p.grad.size() == 0) p.grad = Tensor(p.value.rows, p.value.cols);
    if (p.is_weight && cfg_.weight_decay != 0.0) {
      const double decay = 1.0 - lr * cfg_.weight_decay;
      for (double& w : p.value.data) w *= decay;
    }
    for (size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data[k];
      m_[i].data[k] = cfg_.beta1 * m_[i].data[k] + (1.0 - cfg_.beta1) * g;
      v_[i].data[k] = cfg_.beta2 * v_[i].data[k] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[i].data[k] / bc1;
      const double vhat = v_[i].data[k] / bc2;
      p.value.data[k] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    if (!p.value.all_finite()) throw NumericError("AdamW::step: non-finite parameter " + p.name);
  }
}

SampleLoss sample_loss(GnnModel& model, const Dataset& dataset, const SphericalGraph& graph,
                       const TrainConfig& cfg, const DynamicsParams& params, int sample_index,
                       bool accumulate_grads, double grad_scale) {
  const int T = cfg.loss.autoregressive_steps;
  if (sample_index + T >= dataset.n_steps())
    throw DataError("sample " + std::to_string(sample_index) + ": observation horizon exceeds the dataset");

  IntegratorConfig icfg;
  icfg.substep_hours = cfg.substep_hours;
  icfg.interaction_refresh_hours = cfg.interaction_refresh_hours;
  icfg.lead_time_hours = T * dataset.cadence_hours;
  icfg.physics_enabled = cfg.physics_enabled;

  Rollout roll(model, graph, icfg, params, dataset.stats, /*training=*/true);
  roll.init(dataset.normalized_fields(sample_index), dataset.normalized_constants());
  roll.run();

  // Predictions at the 6 h observation cadence.
  std::vector<std::vector<Var>> pred;
  std::vector<FieldSet> obs;
  const auto& hours = roll.snapshot_hours();
  for (size_t i = 0; i < hours.size(); ++i) {
    const double steps = hours[i] / dataset.cadence_hours;
    if (std::abs(steps - std::round(steps)) > 1e-9) continue;
    pred.push_back(roll.snapshot_vars()[i]);
    obs.push_back(dataset.normalized_fields(sample_index + static_cast<int>(std::round(steps))));
  }

  Tape& tape = roll.tape();
  Var basic = loss_basic_on(tape, pred, obs);
  Var total = basic;
  Var vel{};
  if (cfg.physics_enabled) {
    vel = loss_velocity_on(tape, roll.initial_velocity_vars(), graph.grid, cfg.loss);
    total = tape.add(basic, vel);
  }
  SampleLoss out;
  out.basic = tape.scalar(basic);
  out.velocity = vel.valid() ? tape.scalar(vel) : 0.0;
  if (!std::isfinite(out.basic) || !std::isfinite(out.velocity))
    throw NumericError("non-finite loss at sample " + std::to_string(sample_index));
  if (accumulate_grads) {
    tape.backward(total);
    pull_param_grads(tape, roll.lease(), model, grad_scale);
  }
  return out;
}

EpochStats train_epoch(GnnModel& model, const Dataset& dataset, const SphericalGraph& graph, AdamW& opt,
                       const TrainConfig& cfg, const DynamicsParams& params, int epoch_index,
                       int64_t& global_step) {
  const int T = cfg.loss.autoregressive_steps;
  const int n_samples = dataset.n_steps() - T;
  if (n_samples < 1) throw DataError("train_epoch: dataset too short for the autoregressive horizon");

  // Initial times sampled without replacement, seeded per (seed, epoch).
  std::vector<int> order(n_samples);
  for (int i = 0; i < n_samples; ++i) order[i] = i;
  Rng rng(cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(epoch_index) + 1);
  rng.shuffle(order);

  EpochStats stats;
  std::vector<double> grad_norms;
  double sum_basic = 0.0, sum_vel = 0.0;
  int n_done = 0;
  for (int b0 = 0; b0 < n_samples; b0 += cfg.batch_size) {
    const int bn = std::min(cfg.batch_size, n_samples - b0);
    model.zero_grads();
    for (int k = 0; k < bn; ++k) {
      const SampleLoss l =
          sample_loss(model, dataset, graph, cfg, params, order[b0 + k], /*accumulate_grads=*/true, 1.0 / bn);
      sum_basic += l.basic;
      sum_vel += l.velocity;
      ++n_done;
    }
    grad_norms.push_back(opt.clip_gradients(model));
    const double lr = cosine_lr(std::min(global_step, cfg.total_steps), cfg.total_steps, cfg.optimizer.lr_max,
                                cfg.optimizer.lr_min);
    opt.step(model, lr);
    ++global_step;
    stats.last_lr = lr;
    ++stats.optimizer_steps;
  }
  stats.mean_loss_basic = sum_basic / n_done;
  stats.mean_loss_velocity = sum_vel / n_done;
  std::sort(grad_norms.begin(), grad_norms.end());
  stats.grad_norm_min = grad_norms.front();
  stats.grad_norm_max = grad_norms.back();
  stats.grad_norm_median = grad_norms[grad_norms.size() / 2];
  return stats;
}

}  // namespace spherecast
