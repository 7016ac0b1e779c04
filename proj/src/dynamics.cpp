/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/dynamics.hpp"

namespace spherecast {

namespace dyn {

Var advective_derivative(Tape& t, Var u, Var v_theta, Var v_phi, const GridPtr& g) {
  Var du_dth = t.dd_theta(u, g);
  Var du_dph = t.dd_phi(u, g);
  Var meridional = t.mul(v_theta, du_dth);
  Var zonal = t.mul(v_phi, t.row_mul(du_dph, g->inv_cos_lat()));
  return t.add(meridional, zonal);
}

Var planar_advective_derivative(Tape& t, Var u, Var vp_theta, Var vp_phi, const GridPtr& g) {
  Var du_dth = t.dd_theta(u, g);
  Var du_dph = t.dd_phi(u, g);
  return t.add(t.mul(vp_theta, du_dth), t.mul(vp_phi, du_dph));
}

MomentumTendency navier_stokes(Tape& t, Var v_theta, Var v_phi, Var z_model, const GridPtr& g,
                               const DynamicsParams& params) {
  const auto& tan_th = g->tan_lat();
  const auto& sin_th = g->sin_lat();
  const auto& inv_cos = g->inv_cos_lat();
  const auto& inv_cos2 = g->inv_cos2_lat();

  Var dz_dth = t.dd_theta(z_model, g);
  Var dz_dph = t.dd_phi(z_model, g);

  // dv_theta/dt
  Var adv_th = advective_derivative(t, v_theta, v_theta, v_phi, g);
  Var curv_th = t.row_mul(t.mul(v_phi, v_phi), tan_th);
  Var coriolis_th = t.scale(t.row_mul(v_phi, sin_th), 2.0 * params.omega);
  Var friction_th = t.scale(t.row_mul(v_theta, inv_cos2), params.mu);
  Var dv_theta = t.scale(adv_th, -1.0);
  dv_theta = t.sub(dv_theta, curv_th);
  dv_theta = t.sub(dv_theta, dz_dth);
  dv_theta = t.sub(dv_theta, coriolis_th);
  dv_theta = t.sub(dv_theta, friction_th);

  // dv_phi/dt
  Var adv_ph = advective_derivative(t, v_phi, v_theta, v_phi, g);
  Var curv_ph = t.row_mul(t.mul(v_phi, v_theta), tan_th);
  Var pressure_ph = t.row_mul(dz_dph, inv_cos);
  Var coriolis_ph = t.scale(t.row_mul(v_theta, sin_th), 2.0 * params.omega);
  Var friction_ph = t.scale(t.row_mul(v_phi, inv_cos2), params.mu);
  Var dv_phi = t.scale(adv_ph, -1.0);
  dv_phi = t.add(dv_phi, curv_ph);
  dv_phi = t.sub(dv_phi, pressure_ph);
  dv_phi = t.add(dv_phi, coriolis_ph);
  dv_phi = t.sub(dv_phi, friction_ph);

  return {dv_theta, dv_phi};
}

}  // namespace dyn

namespace {

void check_finite(const Tensor& v, const char* what) {
  if (!v.all_finite()) throw NumericError(std::string(what) + ": non-finite input");
}

}  // namespace

ScalarField advective_derivative(const ScalarField& u, const VelocityField& v) {
  require_same_grid(u.grid, v.grid(), "advective_derivative");
  Tape t;
  t.set_recording(false);
  Var out = dyn::advective_derivative(t, t.leaf_grid(u), t.leaf_grid(v.v_theta), t.leaf_grid(v.v_phi), u.grid);
  return {u.grid, t.val(out), UnitsTag{u.units.base, u.units.per_radian}};
}

ScalarField planar_advective_derivative(const ScalarField& u, const VelocityField& v_planar) {
  require_same_grid(u.grid, v_planar.grid(), "planar_advective_derivative");
  Tape t;
  t.set_recording(false);
  Var out = dyn::planar_advective_derivative(t, t.leaf_grid(u), t.leaf_grid(v_planar.v_theta),
                                             t.leaf_grid(v_planar.v_phi), u.grid);
  return {u.grid, t.val(out), UnitsTag{u.units.base, u.units.per_radian}};
}

VelocityField to_planar_velocity(const VelocityField& v) {
  VelocityField out = v;
  const Grid& g = *v.grid();
  for (int r = 0; r < g.n_lat(); ++r)
    for (int c = 0; c < g.n_lon(); ++c) out.v_phi.at(r, c) *= g.inv_cos_lat(r);
  return out;
}

std::pair<ScalarField, ScalarField> navier_stokes_tendency(const VelocityField& v, const ScalarField& z_model,
                                                           const DynamicsParams& params) {
  require_same_grid(v.grid(), z_model.grid, "navier_stokes_tendency");
  check_finite(v.v_theta.values, "navier_stokes_tendency(v_theta)");
  check_finite(v.v_phi.values, "navier_stokes_tendency(v_phi)");
  check_finite(z_model.values, "navier_stokes_tendency(z)");
  Tape t;
  t.set_recording(false);
  auto out = dyn::navier_stokes(t, t.leaf_grid(v.v_theta), t.leaf_grid(v.v_phi), t.leaf_grid(z_model), v.grid(),
                                params);
  const UnitsTag vel_units{Units::ModelUnits, 0};
  return {ScalarField(v.grid(), t.val(out.dv_theta), vel_units), ScalarField(v.grid(), t.val(out.dv_phi), vel_units)};
}

}  // namespace spherecast
