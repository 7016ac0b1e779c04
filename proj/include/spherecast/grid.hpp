/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <array>
#include <memory>

#include "spherecast/common.hpp"

namespace spherecast {

// Base unit of a field value. Angles are radians everywhere internally;
// degrees only appear at the I/O boundary.
enum class Units : uint8_t {
  Normalized = 0,   // dimensionless, (x - mean)/std
  Kelvin = 1,       // K
  Geopotential = 2, // m^2/s^2
  WindMS = 3,       // m/s
  ModelUnits = 4,   // unit-sphere radians/hour (equivalently 6371 km/hour)
  Dimensionless = 5
};

struct UnitsTag {
  Units base = Units::Dimensionless;
  int8_t per_radian = 0;  // exponent: ddtheta/ddphi output carries per_radian - 1

  bool operator==(const UnitsTag&) const = default;
};

const char* units_name(Units u);
Units units_from_name(const std::string& name);

// Discrete latitude-longitude raster embedded on the unit sphere.
// Latitude rows are cell-centered and pole-free:
//   lat_deg[i] = -90 + (i + 0.5) * 180/n_lat, converted to radians per value
// (this is the 5.625-degree ERA5 raster convention for n_lat = 32).
// Longitudes are uniform on [-pi, pi).
class Grid {
 public:
  static std::shared_ptr<const Grid> regular(int n_lat, int n_lon);

  int n_lat() const { return n_lat_; }
  int n_lon() const { return n_lon_; }
  int n_nodes() const { return n_lat_ * n_lon_; }
  double d_theta() const { return d_theta_; }
  double d_phi() const { return d_phi_; }
  double radius_km() const { return radius_km_; }

  double lat(int i) const { return lat_[i]; }
  double lon(int j) const { return lon_[j]; }
  double cos_lat(int i) const { return cos_lat_[i]; }
  double sin_lat(int i) const { return sin_lat_[i]; }
  double tan_lat(int i) const { return tan_lat_[i]; }
  double inv_cos_lat(int i) const { return inv_cos_[i]; }
  double inv_cos2_lat(int i) const { return inv_cos2_[i]; }

  const std::vector<double>& lat() const { return lat_; }
  const std::vector<double>& lon() const { return lon_; }
  const std::vector<double>& cos_lat() const { return cos_lat_; }
  const std::vector<double>& sin_lat() const { return sin_lat_; }
  const std::vector<double>& tan_lat() const { return tan_lat_; }
  const std::vector<double>& inv_cos_lat() const { return inv_cos_; }
  const std::vector<double>& inv_cos2_lat() const { return inv_cos2_; }

  // Node index of grid cell (row, col) in the flattened ordering
  // (row-major: node k = row * n_lon + col).
  int node(int row, int col) const { return row * n_lon_ + col; }

  bool same_layout(const Grid& o) const {
    return n_lat_ == o.n_lat_ && n_lon_ == o.n_lon_ && lat_ == o.lat_ && lon_ == o.lon_;
  }

 private:
  Grid() = default;
  int n_lat_ = 0, n_lon_ = 0;
  double d_theta_ = 0, d_phi_ = 0;
  double radius_km_ = 6371.0;
  std::vector<double> lat_, lon_, cos_lat_, sin_lat_, tan_lat_, inv_cos_, inv_cos2_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline void require_same_grid(const GridPtr& a, const GridPtr& b, const char* what) {
  if (a.get() == b.get()) return;
  if (!a || !b || !a->same_layout(*b)) throw DimensionError(std::string(what) + ": grid mismatch");
}

// A scalar field on a grid. Values are row-major (lat, lon).
struct ScalarField {
  GridPtr grid;
  Tensor values;
  UnitsTag units;

  ScalarField() = default;
  ScalarField(GridPtr g, UnitsTag u = {}) : grid(std::move(g)), values(grid->n_lat(), grid->n_lon()), units(u) {}
  ScalarField(GridPtr g, Tensor v, UnitsTag u = {}) : grid(std::move(g)), values(std::move(v)), units(u) {
    if (values.rows != grid->n_lat() || values.cols != grid->n_lon())
      throw DimensionError("ScalarField: values shape does not match grid");
  }

  double& at(int r, int c) { return values.at(r, c); }
  double at(int r, int c) const { return values.at(r, c); }
};

// Ordered collection of scalar fields (one per weather variable).
struct FieldSet {
  std::vector<ScalarField> fields;

  FieldSet() = default;
  explicit FieldSet(std::vector<ScalarField> f) : fields(std::move(f)) {}
  int size() const { return static_cast<int>(fields.size()); }
  ScalarField& operator[](int i) { return fields[i]; }
  const ScalarField& operator[](int i) const { return fields[i]; }
};

// Meridional (v_theta) and zonal (v_phi) velocity components, in
// model units: unit-sphere radians/hour, measured on the sphere.
struct VelocityField {
  ScalarField v_theta;
  ScalarField v_phi;

  VelocityField() = default;
  VelocityField(ScalarField vt, ScalarField vp) : v_theta(std::move(vt)), v_phi(std::move(vp)) {
    require_same_grid(v_theta.grid, v_phi.grid, "VelocityField");
  }
  const GridPtr& grid() const { return v_theta.grid; }
};

// --- spherical geometry -------------------------------------------------

// (theta, phi) -> unit 3-vector (cos t cos p, cos t sin p, sin t).
std::array<double, 3> lat_lon_to_cartesian(double theta, double phi);

// Great-circle distance in unit-sphere radians between (theta, phi) points.
double haversine(double theta_a, double phi_a, double theta_b, double phi_b);

// Same formula evaluated from a latitude pair and a longitude difference.
// Graph construction uses this with delta_phi derived from integer column
// offsets so that zonally symmetric pairs get bit-identical distances.
double haversine_dlon(double theta_a, double theta_b, double delta_phi);

// --- finite-difference stencil kernels ----------------------------------
// Shared by the plain field operators below and by the tape ops; the
// adjoints are the exact transposes of the forward stencils.
namespace stencil {

// Central differences in latitude on interior rows, one-sided first-order
// on the first and last rows. Requires n_lat >= 3.
void d_dtheta(const Tensor& in, const Grid& g, Tensor& out);
void d_dtheta_adjoint(const Tensor& gout, const Grid& g, Tensor& gin_accum);

// Central differences in longitude with periodic wraparound.
void d_dphi(const Tensor& in, const Grid& g, Tensor& out);
void d_dphi_adjoint(const Tensor& gout, const Grid& g, Tensor& gin_accum);

}  // namespace stencil

// Plain field-level difference operators (pure; output units = input per radian).
ScalarField ddtheta(const ScalarField& f);
ScalarField ddphi(const ScalarField& f);

}  // namespace spherecast
