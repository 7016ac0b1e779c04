/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/metrics.hpp"

#include <cmath>

namespace spherecast {

ScalarField lat_weights(const GridPtr& grid) {
  const int R = grid->n_lat(), C = grid->n_lon();
  double mean_cos = 0.0;
  for (int r = 0; r < R; ++r) mean_cos += grid->cos_lat(r);
  mean_cos /= R;
  ScalarField w(grid, UnitsTag{Units::Dimensionless, 0});
  for (int r = 0; r < R; ++r) {
    const double wr = grid->cos_lat(r) / mean_cos;
    for (int c = 0; c < C; ++c) w.at(r, c) = wr;
  }
  return w;
}

double rmse(const ScalarField& pred, const ScalarField& obs) {
  require_same_grid(pred.grid, obs.grid, "rmse");
  const GridPtr& g = pred.grid;
  const ScalarField w = lat_weights(g);
  double acc = 0.0;
  for (int r = 0; r < g->n_lat(); ++r)
    for (int c = 0; c < g->n_lon(); ++c) {
      const double d = pred.at(r, c) - obs.at(r, c);
      acc += w.at(r, c) * d * d;
    }
  return std::sqrt(acc / g->n_nodes());
}

double acc(const ScalarField& pred, const ScalarField& obs, const Tensor& climatology_mean) {
  require_same_grid(pred.grid, obs.grid, "acc");
  const GridPtr& g = pred.grid;
  require_same_shape(pred.values, climatology_mean, "acc(climatology)");
  const int R = g->n_lat(), C = g->n_lon();
  const int N = g->n_nodes();
  const ScalarField w = lat_weights(g);

  // Clim(u) = u - C - spatial mean of (u - C), unweighted mean inside.
  auto centered = [&](const ScalarField& f) {
    Tensor a(R, C);
    double mean = 0.0;
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c) {
        a.at(r, c) = f.at(r, c) - climatology_mean.at(r, c);
        mean += a.at(r, c);
      }
    mean /= N;
    for (double& v : a.data) v -= mean;
    return a;
  };
  const Tensor ap = centered(pred);
  const Tensor ao = centered(obs);

  double num = 0.0, den_p = 0.0, den_o = 0.0;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      const double wr = w.at(r, c);
      num += wr * ap.at(r, c) * ao.at(r, c);
      den_p += wr * ap.at(r, c) * ap.at(r, c);
      den_o += wr * ao.at(r, c) * ao.at(r, c);
    }
  if (den_p <= 0.0 || den_o <= 0.0)
    throw ZeroVarianceError("acc: zero-variance anomaly field (prediction or observation)");
  return num / std::sqrt(den_p * den_o);
}

}  // namespace spherecast
