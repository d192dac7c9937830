// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ndtdse/hamiltonian.hpp"
#include "ndtdse/observables.hpp"
#include "ndtdse/propagator.hpp"
#include "ndtdse/pulse.hpp"

namespace ndt {

// Run configuration. The text format is a small TOML subset:
//
//   # comment
//   model = ["dipole", "first_order"]     # or a single string
//   [pulse]
//   shape = "sin2"
//   e0 = 10.0
//
// Values are numbers, booleans, double-quoted strings or arrays
// of those. Keys before the first [section] belong to the root table.

struct PulseConfig {
  EnvelopeShape shape = EnvelopeShape::SinSquared;
  // Exactly one field strength: e0 (a.u.), intensity (W/cm^2) or the peak
  // quiver velocity as a fraction of c.
  std::optional<double> e0;
  std::optional<double> intensity;
  std::optional<double> quiver_fraction;
  double omega = 0.0;
  double cep = 0.0;
  // Exactly one of these.
  std::optional<double> n_cycles;
  std::optional<double> duration;
  double sigma = 1.0;

  double field_strength() const;
  double total_duration() const;
  Pulse build() const;
};

struct BasisConfig {
  std::optional<double> r_max;  // nullopt: auto
  int order = 7;
  int n_breakpoints = 0;  // 0: auto
  KnotLaw knot_law = KnotLaw::SqrtRamp;
  double r_match = 20.0;
  int l_max = 10;
  std::optional<int> m_max;  // nullopt: l_max (0 for the dipole model)
  double e_cut = 30.0;
  ChannelSymmetry symmetry = ChannelSymmetry::Full;
};

struct PropagatorSection {
  std::optional<double> dt;
  std::optional<double> steps_per_cycle;  // default 200 when dt is unset
  int krylov_dim_max = 40;
  double krylov_tol = 1e-12;
  bool renormalize = false;
  std::optional<double> mask_r_on;
  double mask_exponent = 0.125;
  std::int64_t checkpoint_every = 0;  // steps; 0 disables periodic checkpoints
};

enum class Observable { Ionization, EnergySpectrum, Angular, Probes };

std::string_view to_string(Observable o);
std::optional<Observable> parse_observable(std::string_view name);

struct OutputConfig {
  std::vector<Observable> observables = {Observable::Ionization, Observable::EnergySpectrum,
                                         Observable::Probes};
  int probe_stride = 10;
  std::string directory = "out";
  double de = 0.05;
  double e_max = 10.0;
  int n_theta = 48;
  int n_phi = 48;
  std::optional<double> t_ref;  // default: pulse center
  bool final_checkpoint = true;

  bool wants(Observable o) const;
};

struct SweepConfig {
  std::string parameter;  // empty: no sweep
  std::vector<double> values;
  bool empty() const { return parameter.empty(); }
};

struct RunConfig {
  PulseConfig pulse;
  BasisConfig basis;
  std::vector<InteractionModel> models;
  PropagatorSection propagator;
  OutputConfig outputs;
  SweepConfig sweep;
  /// Source position of every key, "section.key" -> (line, column).
  std::map<std::string, std::pair<int, int>> locations;
};

/// Parses and validates; every error carries the line and column of the
/// offending text where one exists.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Names accepted as sweep parameters.
const std::vector<std::string>& sweep_parameters();

/// Auto box radius: max(150, 4 E0 / omega^2 + 50), four quiver amplitudes
/// plus margin.
double auto_r_max(double e0, double omega);

/// One fully resolved simulation.
struct JobSpec {
  std::string name;
  InteractionModel model = InteractionModel::Dipole;
  std::optional<double> sweep_value;
  /// Single-model, sweep-free config with every default filled in.
  RunConfig config;
  std::string config_text;
  std::string config_hash;  // SHA-256 of config_text, hex
  Pulse pulse;
  BasisSettings basis;
  PropagatorConfig propagator;
  ProbeSpec probes;
  AngularOptions angular;
};

/// One job per (model, sweep value), model-major.
std::vector<JobSpec> expand_jobs(const RunConfig& config);

/// Canonical text of a config. Re-parsing it gives back the same config.
std::string to_config_text(const RunConfig& config);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Leading 64 bits of a hex digest, for binary headers.
std::uint64_t digest_prefix(const std::string& hex);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace ndt
