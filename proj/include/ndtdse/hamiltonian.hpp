// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ndtdse/angular.hpp"
#include "ndtdse/pulse.hpp"
#include "ndtdse/radial_basis.hpp"

namespace ndt {

enum class InteractionModel { Dipole, FirstOrder, EnvelopeVG, PGFull, PGEnvelope };

std::string_view to_string(InteractionModel model);
std::optional<InteractionModel> parse_interaction_model(std::string_view name);
inline constexpr std::array kAllModels = {InteractionModel::Dipole, InteractionModel::FirstOrder,
                                          InteractionModel::EnvelopeVG, InteractionModel::PGFull,
                                          InteractionModel::PGEnvelope};

struct BasisSettings {
  double r_max = 150.0;
  int order = 7;
  int n_breakpoints = 0;
  KnotLaw knot_law = KnotLaw::SqrtRamp;
  double r_match = 20.0;
  int l_max = 10;
  int m_max = 0;
  double e_cut = 30.0;
  ChannelSymmetry symmetry = ChannelSymmetry::Full;
  double charge = 1.0;
};

/// Default breakpoint count: an outer knot spacing of about 0.6 a.u.
int default_breakpoints(double r_max, KnotLaw law, double r_match);

/// Everything time-independent: radial basis and operators, the truncated
/// field-free spectrum of every partial wave, the channel list and the
/// angular coupling tables. Immutable once built; share freely.
///
/// The working representation is the field-free eigenbasis: the coefficient
/// vector is channel-major, channel c holding n_states(l_c) amplitudes.
struct Discretization {
  BasisSettings settings;
  RadialBasis radial;
  RadialOperators ops;
  std::vector<ChannelSpectrum> spectra;  // per l, truncated at e_cut
  ChannelBasis channels;
  CouplingTables couplings;
  std::vector<Eigen::Index> offsets;  // per channel, plus total at the end

  Eigen::Index dim() const { return offsets.back(); }
  int n_states(int l) const { return spectra[l].size(); }
  Eigen::Index offset(int channel) const { return offsets[channel]; }
  /// Index of the n-th (0-based) eigenstate of channel (l, m), or -1.
  Eigen::Index state_index(int l, int m, int n) const;
};

std::shared_ptr<const Discretization> build_discretization(
    const BasisSettings& settings, const std::filesystem::path& cache_dir = {});

struct WavefunctionState {
  Eigen::VectorXcd coeffs;
  double t = 0.0;

  double norm_sq() const { return coeffs.squaredNorm(); }
};

/// Hydrogen ground state (1s, m = 0) at time t.
WavefunctionState ground_state(const Discretization& disc, double t);

/// Scalars multiplying the X, Pz and Px tables at time t. Momentum tables
/// enter with an extra -i at apply time.
struct InteractionScalars {
  double x = 0.0;
  double pz = 0.0;
  double px = 0.0;
};

InteractionScalars interaction_scalars(InteractionModel model, const Pulse& pulse, double t);

/// H(t) = H0 + pz(t) p_z + x(t) x + px(t) p_x over a Discretization.
class Hamiltonian {
 public:
  Hamiltonian(InteractionModel model, Pulse pulse, std::shared_ptr<const Discretization> disc);

  InteractionModel model() const { return model_; }
  const Pulse& pulse() const { return pulse_; }
  const Discretization& discretization() const { return *disc_; }
  Eigen::Index dim() const { return disc_->dim(); }

  /// out = H(t) psi. Reentrant.
  void apply(const Eigen::VectorXcd& psi, double t, Eigen::VectorXcd& out) const;
  Eigen::VectorXcd apply(const Eigen::VectorXcd& psi, double t) const {
    Eigen::VectorXcd out(psi.size());
    apply(psi, t, out);
    return out;
  }

  /// Number of coupled partial-wave pairs {l, l'}.
  int coupling_block_count() const;

 private:
  struct PairBlock {
    int l_row = 0;
    int l_col = 0;
    // [operator X, Pz, Px][radial kind R, Ddr, InvR]: count(l_row) x count(l_col)
    std::array<std::array<Eigen::MatrixXd, 3>, 3> w;
    std::array<std::array<bool, 3>, 3> used{};
  };

  InteractionModel model_;
  Pulse pulse_;
  std::shared_ptr<const Discretization> disc_;
  std::vector<PairBlock> blocks_;
};

/// Gauge transformations between velocity and propagation gauges reduce to
/// the identity where A and f vanish; reports whether that holds at both
/// ends of the simulation window.
struct GaugeBoundaryReport {
  double a_start = 0.0;
  double f_start = 0.0;
  double a_end = 0.0;
  double f_end = 0.0;
  bool u_is_identity = false;
  double tolerance = 1e-8;
};

GaugeBoundaryReport gauge_boundary_check(const Pulse& pulse, double tolerance = 1e-8);

}  // namespace ndt
