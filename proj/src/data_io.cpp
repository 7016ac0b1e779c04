/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/data_io.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "spherecast/binio.hpp"

namespace spherecast {

using nlohmann::json;

namespace {

constexpr char kDataMagic[9] = "SCDAT01\0";
constexpr char kTrajMagic[9] = "SCTRJ01\0";
constexpr char kClimMagic[9] = "SCCLM01\0";

double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

// Physical scale of each synthetic variable: base mean, harmonic amplitude,
// and a static pole-to-equator profile amplitude.
struct SynthScale {
  double mean, amp, pole;
};
const SynthScale kSynthScales[5] = {
    {288.0, 12.0, 25.0},    // t2m [K]
    {275.0, 10.0, 18.0},    // t850 [K]
    {54000.0, 2200.0, 3500.0},  // z500 [m^2/s^2]
    {0.0, 5.0, 2.0},        // u10 [m/s]
    {0.0, 5.0, -1.0},       // v10 [m/s]
};

}  // namespace

FieldSet Dataset::physical_fields(int step) const {
  FieldSet out;
  for (int v = 0; v < n_vars(); ++v) out.fields.emplace_back(grid, steps[step][v], UnitsTag{var_units[v], 0});
  return out;
}

FieldSet Dataset::normalized_fields(int step) const { return normalize(physical_fields(step), stats); }

FieldSet Dataset::normalized_constants() const {
  FieldSet physical;
  for (size_t c = 0; c < constants.size(); ++c)
    physical.fields.emplace_back(grid, constants[c], UnitsTag{Units::Dimensionless, 0});
  return normalize(physical, const_stats);
}

FieldSet normalize(const FieldSet& physical, const std::vector<VarStats>& stats) {
  if (static_cast<size_t>(physical.size()) != stats.size())
    throw DataError("normalize: missing stats (have " + std::to_string(stats.size()) + ", need " +
                    std::to_string(physical.size()) + ")");
  FieldSet out;
  for (int v = 0; v < physical.size(); ++v) {
    if (stats[v].std <= 0.0) throw DataError("normalize: non-positive std for variable " + std::to_string(v));
    ScalarField f(physical[v].grid, UnitsTag{Units::Normalized, 0});
    const double inv = 1.0 / stats[v].std;
    for (size_t i = 0; i < f.values.size(); ++i)
      f.values.data[i] = (physical[v].values.data[i] - stats[v].mean) * inv;
    out.fields.push_back(std::move(f));
  }
  return out;
}

FieldSet denormalize(const FieldSet& normalized, const std::vector<VarStats>& stats,
                     const std::vector<Units>& units) {
  if (static_cast<size_t>(normalized.size()) != stats.size()) throw DataError("denormalize: missing stats");
  FieldSet out;
  for (int v = 0; v < normalized.size(); ++v) {
    ScalarField f(normalized[v].grid, UnitsTag{units[v], 0});
    for (size_t i = 0; i < f.values.size(); ++i)
      f.values.data[i] = normalized[v].values.data[i] * stats[v].std + stats[v].mean;
    out.fields.push_back(std::move(f));
  }
  return out;
}

Dataset synth_dataset(uint64_t seed, const GridPtr& grid, int n_steps, const SynthOptions& opt) {
  if (n_steps < 2) throw ConfigError("synth_dataset: need n_steps >= 2");
  Dataset ds;
  ds.grid = grid;
  const int R = grid->n_lat(), C = grid->n_lon();
  const int V = ds.n_vars();
  Rng rng(seed);

  // Harmonic components per variable. Zonal wavenumbers stay low so the
  // patterns are resolvable on toy grids.
  struct Component {
    int m;
    double a, psi, chi, tilt;
  };
  std::vector<std::vector<Component>> comps(V);
  for (int v = 0; v < V; ++v)
    for (int h = 0; h < opt.n_harmonics; ++h) {
      Component c;
      c.m = 1 + static_cast<int>(rng.below(2));
      c.a = rng.uniform(0.5, 1.0);
      c.psi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      c.chi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      c.tilt = rng.uniform(-0.5, 0.5);
      comps[v].push_back(c);
    }

  auto field_at = [&](int v, double t_hours) {
    Tensor f(R, C);
    const SynthScale& sc = kSynthScales[v];
    for (int r = 0; r < R; ++r) {
      const double th = grid->lat(r);
      const double ct = std::cos(th), st = std::sin(th);
      const double static_profile = sc.pole * (1.0 / 3.0 - st * st);  // zero-mean on the sphere
      for (int c = 0; c < C; ++c) {
        const double ph = grid->lon(c);
        double wave = 0.0;
        for (const Component& cm : comps[v]) {
          const double profile = std::pow(ct, cm.m) * (1.0 + cm.tilt * st);
          const double modulation =
              1.0 + opt.modulation_depth * std::sin(2.0 * std::numbers::pi * t_hours / opt.modulation_period_hours + cm.chi);
          wave += cm.a * profile * std::cos(cm.m * (ph - opt.rotation_rate * t_hours) + cm.psi) * modulation;
        }
        f.at(r, c) = quantize_f32(sc.mean + static_profile + sc.amp * wave / opt.n_harmonics);
      }
    }
    return f;
  };

  ds.steps.resize(n_steps);
  for (int s = 0; s < n_steps; ++s) {
    ds.steps[s].reserve(V);
    for (int v = 0; v < V; ++v) ds.steps[s].push_back(field_at(v, s * ds.cadence_hours));
  }

  // Static constants: a smooth pseudo-continent indicator and its relief.
  Tensor shape(R, C);
  const double p1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double p2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      const double th = grid->lat(r), ph = grid->lon(c);
      shape.at(r, c) = std::cos(th) * (0.7 * std::cos(ph + p1) + 0.5 * std::cos(2 * ph + p2)) + 0.3 * std::sin(th);
    }
  Tensor lsm(R, C), oro(R, C);
  for (size_t i = 0; i < shape.size(); ++i) {
    lsm.data[i] = shape.data[i] > 0.25 ? 1.0 : 0.0;
    const double above = std::max(0.0, shape.data[i] - 0.25);
    oro.data[i] = quantize_f32(1500.0 * above * above);
  }
  ds.constants = {lsm, oro};

  // Frozen normalization statistics from the generated data itself.
  auto compute_stats = [](const std::vector<const Tensor*>& fields) {
    double sum = 0.0, sum2 = 0.0;
    size_t n = 0;
    for (const Tensor* t : fields) {
      for (double v : t->data) {
        sum += v;
        sum2 += v * v;
      }
      n += t->size();
    }
    const double mean = sum / static_cast<double>(n);
    double var = sum2 / static_cast<double>(n) - mean * mean;
    if (var < 1e-12) var = 1e-12;
    return VarStats{mean, std::sqrt(var)};
  };
  ds.stats.resize(V);
  for (int v = 0; v < V; ++v) {
    std::vector<const Tensor*> fields;
    for (int s = 0; s < n_steps; ++s) fields.push_back(&ds.steps[s][v]);
    ds.stats[v] = compute_stats(fields);
  }
  ds.const_stats.resize(ds.constants.size());
  for (size_t c = 0; c < ds.constants.size(); ++c) ds.const_stats[c] = compute_stats({&ds.constants[c]});
  return ds;
}

// --- dataset io -----------------------------------------------------------

namespace {

void write_raster_f32(binio::Writer& w, const Tensor& t) {
  for (double v : t.data) w.f32(static_cast<float>(v));
}

Tensor read_raster_f32(binio::Reader& r, int rows, int cols) {
  Tensor t(rows, cols);
  for (double& v : t.data) v = static_cast<double>(r.f32());
  return t;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  binio::Writer w(path);
  w.magic(kDataMagic);
  w.u32(1);  // version
  w.u32(static_cast<uint32_t>(ds.grid->n_lat()));
  w.u32(static_cast<uint32_t>(ds.grid->n_lon()));
  w.u32(static_cast<uint32_t>(ds.n_vars()));
  for (int v = 0; v < ds.n_vars(); ++v) {
    w.str(ds.var_names[v]);
    w.u8(static_cast<uint8_t>(ds.var_units[v]));
    w.f64(ds.stats[v].mean);
    w.f64(ds.stats[v].std);
  }
  w.u32(static_cast<uint32_t>(ds.constants.size()));
  for (size_t c = 0; c < ds.constants.size(); ++c) {
    w.str(ds.const_names[c]);
    w.f64(ds.const_stats[c].mean);
    w.f64(ds.const_stats[c].std);
    write_raster_f32(w, ds.constants[c]);
  }
  w.i64(ds.start_hour);
  w.f64(ds.cadence_hours);
  w.u32(static_cast<uint32_t>(ds.n_steps()));
  for (const auto& step : ds.steps)
    for (const Tensor& t : step) write_raster_f32(w, t);
  if (!w.good()) throw DataError("save_dataset: write failed: " + path);
}

Dataset load_dataset(const std::string& path, const std::optional<std::string>& manifest_path) {
  binio::Reader r(path);
  r.expect_magic(kDataMagic);
  const uint32_t version = r.u32();
  if (version != 1) throw DataError("load_dataset: unsupported version " + std::to_string(version));
  const int n_lat = static_cast<int>(r.u32());
  const int n_lon = static_cast<int>(r.u32());
  Dataset ds;
  ds.grid = Grid::regular(n_lat, n_lon);
  const int nv = static_cast<int>(r.u32());
  ds.var_names.resize(nv);
  ds.var_units.resize(nv);
  ds.stats.resize(nv);
  for (int v = 0; v < nv; ++v) {
    ds.var_names[v] = r.str();
    ds.var_units[v] = static_cast<Units>(r.u8());
    ds.stats[v].mean = r.f64();
    ds.stats[v].std = r.f64();
    if (ds.stats[v].std <= 0.0)
      throw DataError("load_dataset: non-positive std for variable " + ds.var_names[v]);
  }
  const int nc = static_cast<int>(r.u32());
  ds.const_names.resize(nc);
  ds.const_stats.resize(nc);
  ds.constants.clear();
  for (int c = 0; c < nc; ++c) {
    ds.const_names[c] = r.str();
    ds.const_stats[c].mean = r.f64();
    ds.const_stats[c].std = r.f64();
    ds.constants.push_back(read_raster_f32(r, n_lat, n_lon));
  }
  ds.start_hour = r.i64();
  ds.cadence_hours = r.f64();
  const int ns = static_cast<int>(r.u32());
  ds.steps.resize(ns);
  for (int s = 0; s < ns; ++s) {
    ds.steps[s].reserve(nv);
    for (int v = 0; v < nv; ++v) ds.steps[s].push_back(read_raster_f32(r, n_lat, n_lon));
  }

  if (manifest_path) {
    std::ifstream in(*manifest_path);
    if (!in) throw DataError("load_dataset: cannot open manifest " + *manifest_path);
    json m = json::parse(in);
    if (m.at("grid").at("n_lat").get<int>() != n_lat || m.at("grid").at("n_lon").get<int>() != n_lon)
      throw DataError("load_dataset: grid shape does not match manifest");
    const auto& vars = m.at("variables");
    if (vars.size() != static_cast<size_t>(nv)) throw DataError("load_dataset: variable count differs from manifest");
    for (int v = 0; v < nv; ++v) {
      if (vars[v].at("name").get<std::string>() != ds.var_names[v])
        throw DataError("load_dataset: variable ordering differs from manifest at index " + std::to_string(v));
      if (std::abs(vars[v].at("mean").get<double>() - ds.stats[v].mean) > 1e-6 * std::max(1.0, std::abs(ds.stats[v].mean)) ||
          std::abs(vars[v].at("std").get<double>() - ds.stats[v].std) > 1e-6 * std::max(1.0, ds.stats[v].std))
        throw DataError("load_dataset: stats differ from manifest for " + ds.var_names[v]);
    }
  }
  return ds;
}

void write_dataset_manifest(const Dataset& ds, const std::string& path) {
  json m;
  m["grid"] = {{"n_lat", ds.grid->n_lat()}, {"n_lon", ds.grid->n_lon()}};
  m["cadence_hours"] = ds.cadence_hours;
  m["start_hour"] = ds.start_hour;
  m["n_steps"] = ds.n_steps();
  json vars = json::array();
  for (int v = 0; v < ds.n_vars(); ++v)
    vars.push_back({{"name", ds.var_names[v]},
                    {"units", units_name(ds.var_units[v])},
                    {"mean", ds.stats[v].mean},
                    {"std", ds.stats[v].std}});
  m["variables"] = vars;
  json consts = json::array();
  for (size_t c = 0; c < ds.constants.size(); ++c)
    consts.push_back({{"name", ds.const_names[c]}, {"mean", ds.const_stats[c].mean}, {"std", ds.const_stats[c].std}});
  m["constants"] = consts;
  std::ofstream out(path);
  if (!out) throw DataError("write_dataset_manifest: cannot open " + path);
  out << m.dump(2) << "\n";
}

// --- trajectory io ----------------------------------------------------------

void save_trajectory(const Trajectory& t, const std::string& path) {
  binio::Writer w(path);
  w.magic(kTrajMagic);
  w.u32(static_cast<uint32_t>(t.grid->n_lat()));
  w.u32(static_cast<uint32_t>(t.grid->n_lon()));
  w.u32(static_cast<uint32_t>(t.var_names.size()));
  for (size_t v = 0; v < t.var_names.size(); ++v) {
    w.str(t.var_names[v]);
    w.f64(t.stats[v].mean);
    w.f64(t.stats[v].std);
  }
  w.u32(static_cast<uint32_t>(t.init_steps.size()));
  for (int s : t.init_steps) w.u32(static_cast<uint32_t>(s));
  w.u32(static_cast<uint32_t>(t.lead_hours.size()));
  for (double h : t.lead_hours) w.f64(h);
  for (const auto& init : t.data)
    for (const auto& lead : init)
      for (const Tensor& f : lead) write_raster_f32(w, f);
  if (!w.good()) throw DataError("save_trajectory: write failed: " + path);
}

Trajectory load_trajectory(const std::string& path) {
  binio::Reader r(path);
  r.expect_magic(kTrajMagic);
  const int n_lat = static_cast<int>(r.u32());
  const int n_lon = static_cast<int>(r.u32());
  Trajectory t;
  t.grid = Grid::regular(n_lat, n_lon);
  const int nv = static_cast<int>(r.u32());
  t.var_names.resize(nv);
  t.stats.resize(nv);
  for (int v = 0; v < nv; ++v) {
    t.var_names[v] = r.str();
    t.stats[v].mean = r.f64();
    t.stats[v].std = r.f64();
  }
  const int ni = static_cast<int>(r.u32());
  t.init_steps.resize(ni);
  for (int& s : t.init_steps) s = static_cast<int>(r.u32());
  const int nl = static_cast<int>(r.u32());
  t.lead_hours.resize(nl);
  for (double& h : t.lead_hours) h = r.f64();
  t.data.resize(ni);
  for (int i = 0; i < ni; ++i) {
    t.data[i].resize(nl);
    for (int l = 0; l < nl; ++l) {
      t.data[i][l].reserve(nv);
      for (int v = 0; v < nv; ++v) t.data[i][l].push_back(read_raster_f32(r, n_lat, n_lon));
    }
  }
  return t;
}

// --- climatology -------------------------------------------------------------

Climatology climatology_from_dataset(const Dataset& ds) {
  Climatology c;
  c.grid = ds.grid;
  c.var_names = ds.var_names;
  c.mean_fields.resize(ds.n_vars());
  for (int v = 0; v < ds.n_vars(); ++v) {
    Tensor m(ds.grid->n_lat(), ds.grid->n_lon());
    for (int s = 0; s < ds.n_steps(); ++s)
      for (size_t i = 0; i < m.size(); ++i) m.data[i] += ds.steps[s][v].data[i];
    for (double& x : m.data) x /= ds.n_steps();
    c.mean_fields[v] = std::move(m);
  }
  return c;
}

void save_climatology(const Climatology& c, const std::string& path) {
  binio::Writer w(path);
  w.magic(kClimMagic);
  w.u32(static_cast<uint32_t>(c.grid->n_lat()));
  w.u32(static_cast<uint32_t>(c.grid->n_lon()));
  w.u32(static_cast<uint32_t>(c.var_names.size()));
  for (const std::string& n : c.var_names) w.str(n);
  for (const Tensor& f : c.mean_fields)
    for (double v : f.data) w.f64(v);
  if (!w.good()) throw DataError("save_climatology: write failed: " + path);
}

Climatology load_climatology(const std::string& path) {
  binio::Reader r(path);
  r.expect_magic(kClimMagic);
  const int n_lat = static_cast<int>(r.u32());
  const int n_lon = static_cast<int>(r.u32());
  Climatology c;
  c.grid = Grid::regular(n_lat, n_lon);
  const int nv = static_cast<int>(r.u32());
  c.var_names.resize(nv);
  for (std::string& n : c.var_names) n = r.str();
  c.mean_fields.resize(nv);
  for (Tensor& f : c.mean_fields) {
    f = Tensor(n_lat, n_lon);
    for (double& v : f.data) v = r.f64();
  }
  return c;
}

}  // namespace spherecast
