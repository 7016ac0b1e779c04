/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/grid.hpp"

#include <cmath>
#include <numbers>

namespace spherecast {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;
}  // namespace

const char* units_name(Units u) {
  switch (u) {
    case Units::Normalized: return "normalized";
    case Units::Kelvin: return "K";
    case Units::Geopotential: return "m2/s2";
    case Units::WindMS: return "m/s";
    case Units::ModelUnits: return "model-units";
    case Units::Dimensionless: return "dimensionless";
  }
  return "unknown";
}

Units units_from_name(const std::string& name) {
  for (int u = 0; u <= 5; ++u)
    if (name == units_name(static_cast<Units>(u))) return static_cast<Units>(u);
  throw DataError("unknown units tag: " + name);
}

std::shared_ptr<const Grid> Grid::regular(int n_lat, int n_lon) {
  if (n_lat < 1 || n_lon < 2) throw ConfigError("Grid::regular: need n_lat >= 1 and n_lon >= 2");
  auto g = std::shared_ptr<Grid>(new Grid());
  g->n_lat_ = n_lat;
  g->n_lon_ = n_lon;
  g->d_theta_ = kPi / n_lat;
  g->d_phi_ = 2.0 * kPi / n_lon;
  const double dlat_deg = 180.0 / n_lat;
  const double dlon_deg = 360.0 / n_lon;
  g->lat_.resize(n_lat);
  g->cos_lat_.resize(n_lat);
  g->sin_lat_.resize(n_lat);
  g->tan_lat_.resize(n_lat);
  g->inv_cos_.resize(n_lat);
  g->inv_cos2_.resize(n_lat);
  for (int i = 0; i < n_lat; ++i) {
    const double deg = -90.0 + (i + 0.5) * dlat_deg;
    const double th = deg * kDegToRad;
    g->lat_[i] = th;
    g->cos_lat_[i] = std::cos(th);
    g->sin_lat_[i] = std::sin(th);
    g->tan_lat_[i] = std::tan(th);
    g->inv_cos_[i] = 1.0 / g->cos_lat_[i];
    g->inv_cos2_[i] = g->inv_cos_[i] * g->inv_cos_[i];
  }
  g->lon_.resize(n_lon);
  for (int j = 0; j < n_lon; ++j) g->lon_[j] = (-180.0 + j * dlon_deg) * kDegToRad;
  return g;
}

std::array<double, 3> lat_lon_to_cartesian(double theta, double phi) {
  const double ct = std::cos(theta);
  return {ct * std::cos(phi), ct * std::sin(phi), std::sin(theta)};
}

double haversine_dlon(double theta_a, double theta_b, double delta_phi) {
  const double sdt = std::sin(0.5 * (theta_b - theta_a));
  const double sdp = std::sin(0.5 * delta_phi);
  double h = sdt * sdt + std::cos(theta_a) * std::cos(theta_b) * sdp * sdp;
  if (h < 0.0) h = 0.0;
  if (h > 1.0) h = 1.0;
  return 2.0 * std::asin(std::sqrt(h));
}

double haversine(double theta_a, double phi_a, double theta_b, double phi_b) {
  return haversine_dlon(theta_a, theta_b, phi_b - phi_a);
}

namespace stencil {

void d_dtheta(const Tensor& in, const Grid& g, Tensor& out) {
  const int R = g.n_lat(), C = g.n_lon();
  if (R < 3) throw DimensionError("d_dtheta: grid too small (n_lat < 3)");
  out = Tensor(R, C);
  const double inv_d = 1.0 / g.d_theta();
  const double inv_2d = 0.5 * inv_d;
  for (int c = 0; c < C; ++c) {
    out.at(0, c) = (in.at(1, c) - in.at(0, c)) * inv_d;
    out.at(R - 1, c) = (in.at(R - 1, c) - in.at(R - 2, c)) * inv_d;
  }
  for (int r = 1; r < R - 1; ++r)
    for (int c = 0; c < C; ++c) out.at(r, c) = (in.at(r + 1, c) - in.at(r - 1, c)) * inv_2d;
}

void d_dtheta_adjoint(const Tensor& gout, const Grid& g, Tensor& gin) {
  const int R = g.n_lat(), C = g.n_lon();
  const double inv_d = 1.0 / g.d_theta();
  const double inv_2d = 0.5 * inv_d;
  for (int c = 0; c < C; ++c) {
    gin.at(1, c) += gout.at(0, c) * inv_d;
    gin.at(0, c) -= gout.at(0, c) * inv_d;
    gin.at(R - 1, c) += gout.at(R - 1, c) * inv_d;
    gin.at(R - 2, c) -= gout.at(R - 1, c) * inv_d;
  }
  for (int r = 1; r < R - 1; ++r)
    for (int c = 0; c < C; ++c) {
      gin.at(r + 1, c) += gout.at(r, c) * inv_2d;
      gin.at(r - 1, c) -= gout.at(r, c) * inv_2d;
    }
}

void d_dphi(const Tensor& in, const Grid& g, Tensor& out) {
  const int R = g.n_lat(), C = g.n_lon();
  out = Tensor(R, C);
  const double inv_2d = 0.5 / g.d_phi();
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      const int ce = (c + 1) % C;
      const int cw = (c + C - 1) % C;
      out.at(r, c) = (in.at(r, ce) - in.at(r, cw)) * inv_2d;
    }
}

void d_dphi_adjoint(const Tensor& gout, const Grid& g, Tensor& gin) {
  const int R = g.n_lat(), C = g.n_lon();
  const double inv_2d = 0.5 / g.d_phi();
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      const int ce = (c + 1) % C;
      const int cw = (c + C - 1) % C;
      gin.at(r, ce) += gout.at(r, c) * inv_2d;
      gin.at(r, cw) -= gout.at(r, c) * inv_2d;
    }
}

}  // namespace stencil

ScalarField ddtheta(const ScalarField& f) {
  ScalarField out(f.grid, UnitsTag{f.units.base, static_cast<int8_t>(f.units.per_radian - 1)});
  stencil::d_dtheta(f.values, *f.grid, out.values);
  return out;
}

ScalarField ddphi(const ScalarField& f) {
  ScalarField out(f.grid, UnitsTag{f.units.base, static_cast<int8_t>(f.units.per_radian - 1)});
  stencil::d_dphi(f.values, *f.grid, out.values);
  return out;
}

}  // namespace spherecast
