/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "spherecast/metrics.hpp"

using namespace spherecast;
namespace orc = spherecast::oracles;

namespace {
const UnitsTag kPhys{Units::Kelvin, 0};
}

TEST_CASE("lat_weights") {
  SUBCASE("degenerate single-row grid gives unit weights") {
    auto g = Grid::regular(1, 8);
    ScalarField w = lat_weights(g);
    for (double v : w.values.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("standard grid: mean one, cosine ratios, oracle match") {
    auto g = Grid::regular(32, 64);
    ScalarField w = lat_weights(g);
    double mean = 0.0;
    for (double v : w.values.data) mean += v;
    mean /= w.values.size();
    CHECK(std::abs(mean - 1.0) < 1e-12);
    for (int i : {0, 5, 16})
      for (int j : {1, 15, 31})
        CHECK(w.at(i, 0) / w.at(j, 0) == doctest::Approx(g->cos_lat(i) / g->cos_lat(j)).epsilon(1e-14));
    // Equator-adjacent rows carry the maximum weight.
    double wmax = 0.0;
    for (int i = 0; i < 32; ++i) wmax = std::max(wmax, w.at(i, 0));
    CHECK(w.at(15, 0) == doctest::Approx(wmax).epsilon(1e-15));
    // Brute-force two-pass oracle.
    double mean_cos = 0.0;
    for (int i = 0; i < 32; ++i)
      for (int c = 0; c < 64; ++c) mean_cos += std::cos(g->lat(i));
    mean_cos /= 2048.0;
    for (int i = 0; i < 32; ++i)
      for (int c = 0; c < 64; ++c) CHECK(orc::close(w.at(i, c), std::cos(g->lat(i)) / mean_cos, 1e-14));
  }
}

TEST_CASE("rmse") {
  auto g = Grid::regular(16, 8);
  Rng rng(3);
  ScalarField obs = orc::random_field(rng, g, 250.0, 300.0, kPhys);

  SUBCASE("identical fields") { CHECK(rmse(obs, obs) == 0.0); }
  SUBCASE("constant offset reproduces the constant") {
    for (double c : {0.5, 3.0, 12.25}) {
      ScalarField pred = obs;
      for (double& v : pred.values.data) v += c;
      CHECK(rmse(pred, obs) == doctest::Approx(c).epsilon(1e-12));
    }
  }
  SUBCASE("matches the double-loop oracle on toy fields") {
    auto g4 = Grid::regular(4, 4);
    Rng r2(9);
    for (int trial = 0; trial < 10; ++trial) {
      ScalarField p = orc::random_field(r2, g4, -5.0, 5.0, kPhys);
      ScalarField o = orc::random_field(r2, g4, -5.0, 5.0, kPhys);
      CHECK(orc::close(rmse(p, o), orc::rmse_oracle(p.values, o.values, *g4), 1e-12));
    }
  }
  SUBCASE("homogeneity and symmetry") {
    ScalarField p = orc::random_field(rng, g, -2.0, 2.0, kPhys);
    ScalarField o = orc::random_field(rng, g, -2.0, 2.0, kPhys);
    const double base = rmse(p, o);
    CHECK(rmse(o, p) == base);  // (a-b)^2 == (b-a)^2 exactly
    for (double alpha : {2.0, 7.5}) {
      ScalarField pa = p, oa = o;
      for (double& v : pa.values.data) v *= alpha;
      for (double& v : oa.values.data) v *= alpha;
      CHECK(orc::close(rmse(pa, oa), alpha * base, 1e-12));
    }
  }
  SUBCASE("grid mismatch") {
    ScalarField other(Grid::regular(8, 8), kPhys);
    CHECK_THROWS_AS(rmse(obs, other), DimensionError);
  }
}

TEST_CASE("acc") {
  auto g = Grid::regular(16, 8);
  Rng rng(5);
  Tensor clim = orc::random_tensor(rng, 16, 8);
  for (double& v : clim.data) v = 270.0 + 10.0 * v;

  auto with_anomaly = [&](double scale, double offset) {
    ScalarField f(g, kPhys);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 8; ++c)
        f.at(r, c) = clim.at(r, c) + scale * std::sin(0.7 * r + 1.3 * c) + offset;
    return f;
  };

  SUBCASE("perfect prediction scores one") {
    ScalarField obs = with_anomaly(3.0, 0.0);
    CHECK(acc(obs, obs, clim) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("sign-flipped anomaly scores minus one") {
    ScalarField obs = with_anomaly(3.0, 0.0);
    ScalarField pred(g, kPhys);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 8; ++c) pred.at(r, c) = 2.0 * clim.at(r, c) - obs.at(r, c);
    CHECK(acc(pred, obs, clim) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("matches the brute-force oracle and stays in [-1, 1]") {
    for (int trial = 0; trial < 10; ++trial) {
      ScalarField p = orc::random_field(rng, g, 260.0, 280.0, kPhys);
      ScalarField o = orc::random_field(rng, g, 260.0, 280.0, kPhys);
      const double a = acc(p, o, clim);
      CHECK(orc::close(a, orc::acc_oracle(p.values, o.values, clim, *g), 1e-12));
      CHECK(a >= -1.0 - 1e-12);
      CHECK(a <= 1.0 + 1e-12);
    }
  }
  SUBCASE("invariant to constant shifts of the prediction") {
    ScalarField obs = with_anomaly(3.0, 0.0);
    ScalarField pred = with_anomaly(2.0, 0.0);
    const double base = acc(pred, obs, clim);
    ScalarField shifted = pred;
    for (double& v : shifted.values.data) v += 123.0;
    CHECK(acc(shifted, obs, clim) == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("invariant to positive rescaling of the prediction anomaly") {
    ScalarField obs = with_anomaly(3.0, 0.0);
    ScalarField pred = with_anomaly(2.0, 1.0);
    const double base = acc(pred, obs, clim);
    ScalarField scaled(g, kPhys);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 8; ++c) scaled.at(r, c) = clim.at(r, c) + 4.0 * (pred.at(r, c) - clim.at(r, c));
    CHECK(acc(scaled, obs, clim) == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("zero-variance anomaly raises the dedicated error") {
    ScalarField obs = with_anomaly(3.0, 0.0);
    ScalarField flat(g, kPhys);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 8; ++c) flat.at(r, c) = clim.at(r, c) + 2.0;  // anomaly constant -> centered to zero
    CHECK_THROWS_AS(acc(flat, obs, clim), ZeroVarianceError);
  }
}
