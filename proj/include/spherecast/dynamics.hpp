/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include "spherecast/grid.hpp"
#include "spherecast/tape.hpp"

namespace spherecast {

// Constants of the momentum equations. omega is the Earth's rotation rate
// in radians/hour. mu (1/hour) is a tunable friction coefficient, not a
// published constant. geopotential_scale converts m^2/s^2 to
// (6371 km)^2/hour^2 = unit-sphere model units.
struct DynamicsParams {
  double omega = 0.2618;
  double mu = 1e-4;
  double geopotential_scale = 3600.0 * 3600.0 / (6.371e6 * 6.371e6);
};

// Tape-level tendency programs. Velocities and fields are grid-shaped Vars
// (n_lat x n_lon); the returned Vars live on the same tape. These are the
// single implementation behind both training (recording on) and the plain
// field-level wrappers below (recording off).
namespace dyn {

// v_theta * du/dtheta + (v_phi / cos theta) * du/dphi
Var advective_derivative(Tape& t, Var u, Var v_theta, Var v_phi, const GridPtr& g);

// v'_theta * du/dtheta + v'_phi * du/dphi (planar chart form)
Var planar_advective_derivative(Tape& t, Var u, Var vp_theta, Var vp_phi, const GridPtr& g);

struct MomentumTendency {
  Var dv_theta;
  Var dv_phi;
};

// Right-hand sides of the momentum equations:
//   dv_theta/dt = -adv(v_theta) - v_phi^2 tan th - dz/dth - 2 w v_phi sin th - mu v_theta / cos^2 th
//   dv_phi/dt   = -adv(v_phi)   + v_phi v_theta tan th - (1/cos th) dz/dph + 2 w v_theta sin th - mu v_phi / cos^2 th
// z_model must already be in model units ((6371 km)^2 / hour^2).
MomentumTendency navier_stokes(Tape& t, Var v_theta, Var v_phi, Var z_model, const GridPtr& g,
                               const DynamicsParams& params);

}  // namespace dyn

// --- plain field-level operations (pure functions) ----------------------

ScalarField advective_derivative(const ScalarField& u, const VelocityField& v);
ScalarField planar_advective_derivative(const ScalarField& u, const VelocityField& v_planar);

// Exact conversion between spherical and planar velocity components:
// v'_theta = v_theta, v'_phi = v_phi / cos theta.
VelocityField to_planar_velocity(const VelocityField& v);

std::pair<ScalarField, ScalarField> navier_stokes_tendency(const VelocityField& v, const ScalarField& z_model,
                                                           const DynamicsParams& params);

}  // namespace spherecast
