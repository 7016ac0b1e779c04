/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "oracles.hpp"
#include "spherecast/data_io.hpp"
#include "spherecast/grid.hpp"

using namespace spherecast;
namespace orc = spherecast::oracles;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("synthetic dataset generation") {
  auto grid = Grid::regular(16, 8);
  Dataset ds = synth_dataset(5, grid, 12);
  CHECK(ds.n_vars() == 5);
  CHECK(ds.n_steps() == 12);
  CHECK(ds.constants.size() == 2);

  SUBCASE("deterministic in the seed") {
    Dataset again = synth_dataset(5, grid, 12);
    for (int s = 0; s < 12; ++s)
      for (int v = 0; v < 5; ++v) CHECK(again.steps[s][v].data == ds.steps[s][v].data);
    Dataset other = synth_dataset(6, grid, 12);
    bool differs = false;
    for (int v = 0; v < 5 && !differs; ++v) differs = other.steps[0][v].data != ds.steps[0][v].data;
    CHECK(differs);
  }

  SUBCASE("stats reproduce from the stored data") {
    for (int v = 0; v < 5; ++v) {
      double sum = 0.0, sum2 = 0.0;
      size_t n = 0;
      for (int s = 0; s < 12; ++s)
        for (double x : ds.steps[s][v].data) {
          sum += x;
          sum2 += x * x;
          ++n;
        }
      const double mean = sum / n;
      const double stdd = std::sqrt(sum2 / n - mean * mean);
      CHECK(orc::close(mean, ds.stats[v].mean, 1e-6, 1e-9));
      CHECK(orc::close(stdd, ds.stats[v].std, 1e-6, 1e-9));
      CHECK(ds.stats[v].std > 0.0);
    }
  }

  SUBCASE("land mask is binary, orography nonnegative") {
    for (double v : ds.constants[0].data) CHECK((v == 0.0 || v == 1.0));
    for (double v : ds.constants[1].data) CHECK(v >= 0.0);
  }

  SUBCASE("fields are zonally smooth: analytic harmonic bound") {
    // Each variable is a sum of m <= 2 harmonics with per-harmonic
    // amplitude <= amp * (1 + depth) / n_harmonics; the centered
    // difference quotient of cos(m phi) is bounded by m.
    SynthOptions opt;
    const double scales[5] = {12.0, 10.0, 2200.0, 5.0, 5.0};
    for (int v = 0; v < 5; ++v) {
      const double bound = 2.0 * scales[v] * (1.0 + opt.modulation_depth);
      ScalarField f(ds.grid, ds.steps[3][v], UnitsTag{ds.var_units[v], 0});
      ScalarField d = ddphi(f);
      for (double x : d.values.data) CHECK(std::abs(x) <= bound);
    }
  }

  SUBCASE("minimal two-step dataset supports one 6h training sample") {
    Dataset tiny = synth_dataset(1, grid, 2);
    CHECK(tiny.n_steps() - 1 == 1);  // one (initial, observation) pair at T_a = 1
    CHECK_THROWS_AS(synth_dataset(1, grid, 1), ConfigError);
  }
}

TEST_CASE("normalization") {
  auto grid = Grid::regular(16, 8);
  Dataset ds = synth_dataset(9, grid, 6);

  SUBCASE("normalize then denormalize is the identity within 1e-6") {
    FieldSet phys = ds.physical_fields(2);
    FieldSet norm = normalize(phys, ds.stats);
    FieldSet back = denormalize(norm, ds.stats, ds.var_units);
    for (int v = 0; v < 5; ++v) {
      CHECK(norm[v].units.base == Units::Normalized);
      CHECK(back[v].units.base == ds.var_units[v]);
      for (size_t i = 0; i < back[v].values.size(); ++i)
        CHECK(orc::close(back[v].values.data[i], phys[v].values.data[i], 1e-6));
    }
  }

  SUBCASE("a field equal to its mean normalizes to zero") {
    FieldSet phys = ds.physical_fields(0);
    phys[1].values.fill(ds.stats[1].mean);
    FieldSet norm = normalize(phys, ds.stats);
    for (double v : norm[1].values.data) CHECK(v == 0.0);
  }

  SUBCASE("direct arithmetic example") {
    std::vector<VarStats> stats = {{54000.0, 3000.0}};
    FieldSet phys;
    phys.fields.emplace_back(grid, UnitsTag{Units::Geopotential, 0});
    phys[0].values.fill(54000.0);
    FieldSet norm = normalize(phys, stats);
    for (double v : norm[0].values.data) CHECK(v == 0.0);
  }

  SUBCASE("missing stats are rejected") {
    FieldSet phys = ds.physical_fields(0);
    CHECK_THROWS_AS(normalize(phys, std::vector<VarStats>(3)), DataError);
    std::vector<VarStats> bad = ds.stats;
    bad[2].std = 0.0;
    CHECK_THROWS_AS(normalize(phys, bad), DataError);
  }
}

TEST_CASE("dataset file round-trips bit-exactly") {
  auto grid = Grid::regular(16, 8);
  Dataset ds = synth_dataset(17, grid, 5);
  const std::string p1 = "ds_rt1.bin", p2 = "ds_rt2.bin";
  save_dataset(ds, p1);
  Dataset loaded = load_dataset(p1);
  save_dataset(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  // Values survive exactly: the generator quantizes to f32 at creation.
  for (int s = 0; s < 5; ++s)
    for (int v = 0; v < 5; ++v) CHECK(loaded.steps[s][v].data == ds.steps[s][v].data);
  CHECK(loaded.stats[0].mean == ds.stats[0].mean);
  CHECK(loaded.var_names == ds.var_names);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("dataset loader validation") {
  auto grid = Grid::regular(16, 8);
  Dataset ds = synth_dataset(3, grid, 4);
  const std::string path = "ds_val.bin";

  SUBCASE("bad magic is rejected") {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOTMAGIC and some trailing bytes that do not matter";
    bad.close();
    CHECK_THROWS_AS(load_dataset(path), DataError);
  }

  SUBCASE("zero std in the stats block is rejected") {
    ds.stats[3].std = 0.0;
    save_dataset(ds, path);
    CHECK_THROWS_AS(load_dataset(path), DataError);
  }

  SUBCASE("manifest validation") {
    save_dataset(ds, path);
    write_dataset_manifest(ds, path + ".manifest.json");
    CHECK_NOTHROW(load_dataset(path, path + ".manifest.json"));

    // Tampered stats.
    Dataset evil = ds;
    evil.stats[0].mean += 1.0;
    write_dataset_manifest(evil, path + ".bad1.json");
    CHECK_THROWS_AS(load_dataset(path, path + ".bad1.json"), DataError);

    // Wrong variable order.
    Dataset swapped = ds;
    std::swap(swapped.var_names[0], swapped.var_names[1]);
    write_dataset_manifest(swapped, path + ".bad2.json");
    CHECK_THROWS_AS(load_dataset(path, path + ".bad2.json"), DataError);
    std::remove((path + ".manifest.json").c_str());
    std::remove((path + ".bad1.json").c_str());
    std::remove((path + ".bad2.json").c_str());
  }
  std::remove(path.c_str());
}

TEST_CASE("trajectory container round-trips bit-exactly") {
  auto grid = Grid::regular(8, 8);
  Rng rng(3);
  Trajectory t;
  t.grid = grid;
  t.var_names = kVariableNames;
  t.stats.assign(5, VarStats{1.0, 2.0});
  t.init_steps = {0, 2, 4};
  t.lead_hours = {6.0, 12.0};
  for (size_t i = 0; i < t.init_steps.size(); ++i) {
    std::vector<std::vector<Tensor>> leads;
    for (size_t l = 0; l < t.lead_hours.size(); ++l) {
      std::vector<Tensor> vars;
      for (int v = 0; v < 5; ++v) {
        Tensor f = orc::random_tensor(rng, 8, 8);
        for (double& x : f.data) x = static_cast<double>(static_cast<float>(x));
        vars.push_back(std::move(f));
      }
      leads.push_back(std::move(vars));
    }
    t.data.push_back(std::move(leads));
  }
  const std::string p1 = "traj_rt1.bin", p2 = "traj_rt2.bin";
  save_trajectory(t, p1);
  Trajectory loaded = load_trajectory(p1);
  save_trajectory(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(loaded.init_steps == t.init_steps);
  CHECK(loaded.lead_hours == t.lead_hours);
  CHECK(loaded.data[1][0][3].data == t.data[1][0][3].data);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("climatology") {
  auto grid = Grid::regular(8, 8);
  Dataset ds = synth_dataset(21, grid, 6);
  Climatology c = climatology_from_dataset(ds);
  // Spot check the time mean.
  double expect = 0.0;
  for (int s = 0; s < 6; ++s) expect += ds.steps[s][2].at(3, 4);
  CHECK(c.mean_fields[2].at(3, 4) == doctest::Approx(expect / 6.0).epsilon(1e-15));

  const std::string p1 = "clim_rt1.bin", p2 = "clim_rt2.bin";
  save_climatology(c, p1);
  Climatology loaded = load_climatology(p1);
  save_climatology(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  for (int v = 0; v < 5; ++v) CHECK(loaded.mean_fields[v].data == c.mean_fields[v].data);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}
