/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <optional>
#include <string>

#include "spherecast/grid.hpp"

namespace spherecast {

// Canonical variable order of the pipeline.
inline const std::vector<std::string> kVariableNames = {"t2m", "t850", "z500", "u10", "v10"};
inline const std::vector<std::string> kConstantNames = {"lsm", "orography"};
inline constexpr int kZ500Index = 2;

struct VarStats {
  double mean = 0.0;
  double std = 1.0;
};

// A time series of physical-unit rasters at 6-hour cadence plus static
// constants and frozen normalization statistics. Values are stored as
// 32-bit floats on disk; in memory they are doubles that are exactly
// f32-representable, so write -> load round-trips are bit-exact.
struct Dataset {
  GridPtr grid;
  std::vector<std::string> var_names = kVariableNames;
  std::vector<Units> var_units = {Units::Kelvin, Units::Kelvin, Units::Geopotential, Units::WindMS, Units::WindMS};
  std::vector<VarStats> stats;        // per variable
  std::vector<std::string> const_names = kConstantNames;
  std::vector<VarStats> const_stats;  // per constant
  std::vector<Tensor> constants;      // physical units
  int64_t start_hour = 0;
  double cadence_hours = 6.0;
  std::vector<std::vector<Tensor>> steps;  // [time][var], physical units

  int n_vars() const { return static_cast<int>(var_names.size()); }
  int n_steps() const { return static_cast<int>(steps.size()); }

  // Physical fields at a time step (units tags attached).
  FieldSet physical_fields(int step) const;
  // Normalized fields at a time step.
  FieldSet normalized_fields(int step) const;
  // Normalized static constants (stats over space, fields are time-invariant).
  FieldSet normalized_constants() const;
};

// x -> (x - mean)/std per variable; throws DataError on missing stats.
FieldSet normalize(const FieldSet& physical, const std::vector<VarStats>& stats);
// Inverse map; restores the physical units tags.
FieldSet denormalize(const FieldSet& normalized, const std::vector<VarStats>& stats,
                     const std::vector<Units>& units);

// Synthetic stand-in for reanalysis data: low-order zonal harmonics advected
// by a prescribed solid-body flow with slow amplitude modulation and mean
// reversion, sampled at 6-hour cadence. Deterministic in the seed.
struct SynthOptions {
  double rotation_rate = 0.004;  // radians/hour, within the velocity clamp for cos-profiles
  int n_harmonics = 3;
  double modulation_depth = 0.35;
  double modulation_period_hours = 192.0;  // long enough that persistence error grows out to 96 h
};
Dataset synth_dataset(uint64_t seed, const GridPtr& grid, int n_steps, const SynthOptions& options = {});

void save_dataset(const Dataset& ds, const std::string& path);
// Loads and validates. If a manifest path is given, grid shape, variable
// ordering and stats are checked against it (1e-6 on stats).
Dataset load_dataset(const std::string& path, const std::optional<std::string>& manifest_path = std::nullopt);
// JSON manifest (grid, variables, stats, cadence) describing a dataset.
void write_dataset_manifest(const Dataset& ds, const std::string& path);

// Forecast trajectories: per initial time, per lead time, the predicted
// physical-unit fields of every variable.
struct Trajectory {
  GridPtr grid;
  std::vector<std::string> var_names = kVariableNames;
  std::vector<VarStats> stats;          // copied from the source dataset
  std::vector<int> init_steps;          // index into the dataset time axis
  std::vector<double> lead_hours;       // e.g. 6, 12, ..., 144
  // data[init][lead][var]
  std::vector<std::vector<std::vector<Tensor>>> data;
};

void save_trajectory(const Trajectory& t, const std::string& path);
Trajectory load_trajectory(const std::string& path);

// Per-variable climatological mean fields, physical units.
struct Climatology {
  GridPtr grid;
  std::vector<std::string> var_names = kVariableNames;
  std::vector<Tensor> mean_fields;
};

Climatology climatology_from_dataset(const Dataset& ds);
void save_climatology(const Climatology& c, const std::string& path);
Climatology load_climatology(const std::string& path);

}  // namespace spherecast
