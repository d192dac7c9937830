// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ndtdse/hamiltonian.hpp"

namespace ndt {

/// Amplitudes of a state over the field-free eigenstates of every channel.
/// In the working basis this is a read-off; the discretization must be the
/// one the state was propagated on.
struct SpectralProjection {
  const Discretization* disc = nullptr;
  Eigen::VectorXcd amplitudes;
  double t = 0.0;
  /// Norm removed by an absorber before the projection was taken.
  double absorbed = 0.0;

  double bound_population() const;
  double continuum_population() const;
  double total() const { return amplitudes.squaredNorm(); }
};

SpectralProjection project(const WavefunctionState& psi, const Discretization& disc,
                           double absorbed = 0.0);

/// Continuum population plus absorbed norm.
double ionization_probability(const SpectralProjection& proj);

/// Population outside m = 0.
double m_population(const WavefunctionState& psi, const Discretization& disc);

/// Energy cell [lo, hi] of every positive-energy state of one partial wave.
/// Interior widths are (E_{n+1} - E_{n-1})/2; the first cell starts at
/// max(0, midpoint to the last bound state), the last one is mirrored.
struct StateCells {
  std::vector<int> state;  // index into the spectrum
  std::vector<double> lo, hi;
};

/// Throws NumericalError when two continuum energies coincide.
StateCells continuum_cells(const ChannelSpectrum& spectrum);

/// Uniform output bins on [0, e_max].
struct EnergyGrid {
  double de = 0.05;
  int n_bins = 0;
  double center(int i) const { return (i + 0.5) * de; }
  double lo(int i) const { return i * de; }
};

EnergyGrid make_energy_grid(double e_max, double de);

struct EnergySpectrum {
  EnergyGrid grid;
  std::vector<double> total;
  std::vector<std::vector<double>> per_l;
  /// Integral of total over the grid.
  double integral() const;
};

/// dP/dE: the density |c_n|^2 / width_n of every continuum state spread
/// uniformly over its cell and averaged over each output bin.
EnergySpectrum energy_spectrum(const SpectralProjection& proj, const EnergyGrid& grid);

/// sigma_l = arg Gamma(l + 1 - i Z / k).
double coulomb_phase(int l, double charge, double k);

struct AngularOptions {
  int n_theta = 48;
  int n_phi = 48;
  /// Free evolution from this time to the projection time is removed from
  /// every amplitude before the partial waves are combined, so that box
  /// states of slightly different energy are compared at a common phase.
  double t_ref = 0.0;
  /// Upper energy of the continuum included.
  double e_max = 1e300;
};

/// Energy-integrated dP/dOmega on a Gauss-Legendre (cos theta) x uniform
/// (phi) mesh. Amplitudes in direction k are combined as
/// sum_lm (-i)^l e^{i sigma_l} c_lm Y_lm(k), the projection onto incoming
/// Coulomb scattering states.
struct AngularDistribution {
  std::vector<double> theta;     // n_theta
  std::vector<double> theta_weight;  // quadrature weight in cos(theta)
  std::vector<double> phi;       // n_phi
  Eigen::MatrixXd dp;            // n_theta x n_phi
  double integral() const;
  /// Integral over the directions selected by `keep(theta, phi)`.
  double integral_where(const std::function<bool(double, double)>& keep) const;
};

AngularDistribution angular_distribution(const SpectralProjection& proj, double charge,
                                         const AngularOptions& options);

/// Sum of windowed DFT power of a uniformly sampled trace over the angular
/// frequency band [w_lo, w_hi]. The straight line through the end points is
/// removed and a Hann window applied first.
double band_power(const std::vector<double>& times, const std::vector<double>& values, double w_lo,
                  double w_hi);

}  // namespace ndt
