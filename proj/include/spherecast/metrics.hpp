/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include "spherecast/data_io.hpp"
#include "spherecast/grid.hpp"

namespace spherecast {

// Latitude weights a(s) = cos(theta) / mean(cos(theta')); spatial mean is
// exactly 1 up to rounding.
ScalarField lat_weights(const GridPtr& grid);

// Latitude-weighted root-mean-square error over the grid, physical units.
double rmse(const ScalarField& pred, const ScalarField& obs);

// Raised by acc() when an anomaly field has zero variance.
struct ZeroVarianceError : NumericError {
  explicit ZeroVarianceError(const std::string& msg) : NumericError(msg) {}
};

// Anomaly correlation coefficient against a climatological mean field.
// Anomalies are centered with the plain (unweighted) spatial mean; the
// latitude weights enter the outer sums only.
double acc(const ScalarField& pred, const ScalarField& obs, const Tensor& climatology_mean);

}  // namespace spherecast
