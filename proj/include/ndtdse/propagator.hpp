// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ndtdse/hamiltonian.hpp"

namespace ndt {

/// Absorber applied after every step: radial amplitudes are multiplied by
/// cos(pi/2 (r - r_on)/(r_max - r_on))^exponent beyond r_on.
struct MaskSettings {
  double r_on = 0.0;
  double exponent = 0.125;
};

struct PropagatorConfig {
  double dt = 0.0;
  int krylov_dim_max = 40;
  double krylov_tol = 1e-12;
  bool renormalize = false;
  std::optional<MaskSettings> mask;

  void validate() const;
};

/// Default step: 200 per optical cycle.
double default_time_step(const Pulse& pulse);

struct StepStats {
  int krylov_dim = 0;
  double residual = 0.0;
};

/// psi <- exp(-i H(t + dt/2) dt) psi (midpoint Magnus), evaluated in a
/// Krylov subspace grown until the a-posteriori residual estimate drops
/// below cfg.krylov_tol. Negative dt propagates backwards. Throws
/// NumericalError when krylov_dim_max is reached first.
StepStats step(const Hamiltonian& h, WavefunctionState& psi, double dt,
               const PropagatorConfig& cfg);

/// Precomputed absorber in the working basis: one dense block per l.
class Mask {
 public:
  Mask(const Discretization& disc, const MaskSettings& settings);
  /// Applies the absorber in place; returns the removed norm.
  double apply(WavefunctionState& psi) const;
  bool is_identity() const { return identity_; }

 private:
  const Discretization* disc_;
  std::vector<Eigen::MatrixXd> blocks_;
  bool identity_ = false;
};

WavefunctionState apply_mask(const WavefunctionState& psi, const Discretization& disc,
                             const MaskSettings& mask);

/// Time grid of a propagation: n_steps equal steps covering the pulse window.
struct TimeGrid {
  double t_start = 0.0;
  double dt = 0.0;
  std::int64_t n_steps = 0;
  double time(std::int64_t k) const { return t_start + static_cast<double>(k) * dt; }
};

TimeGrid make_time_grid(const Pulse& pulse, double requested_dt);

struct ProbeSpec {
  /// Record probes every `stride` steps (and always at the first and last step).
  int stride = 10;
};

struct RunTrace {
  WavefunctionState final_state;
  std::vector<double> times;
  std::vector<double> m_population;
  std::vector<double> norm;
  std::vector<double> ground_population;
  std::int64_t steps_taken = 0;
  double mean_krylov_dim = 0.0;
  int max_krylov_dim = 0;
  double max_residual = 0.0;
  /// Norm removed by the mask during this propagation.
  double absorbed = 0.0;
};

/// Called after step k (1-based count of completed steps on the grid).
using StepCallback = std::function<void(std::int64_t step, const WavefunctionState& psi)>;

/// Propagates psi0 from psi0.t to the end of the pulse window on the
/// given grid. psi0.t must lie on the grid; this is how a run resumes from
/// a checkpoint.
RunTrace propagate(const Hamiltonian& h, const WavefunctionState& psi0, const TimeGrid& grid,
                   const PropagatorConfig& cfg, const ProbeSpec& probes,
                   const StepCallback& on_step = {});

// Checkpoint ("NDTS"): header then interleaved little-endian (re, im) doubles.
struct CheckpointHeader {
  std::uint32_t version = 1;
  std::uint32_t n_channels = 0;
  std::uint64_t n_coeffs = 0;
  double t = 0.0;
  std::uint64_t pulse_hash = 0;
  std::uint64_t config_hash = 0;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                      const WavefunctionState& psi);
WavefunctionState read_checkpoint(const std::filesystem::path& path, CheckpointHeader* header = nullptr);

/// Hash of the pulse parameters stored in checkpoints.
std::uint64_t pulse_hash(const Pulse& pulse);

}  // namespace ndt
