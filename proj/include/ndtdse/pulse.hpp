// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>

namespace ndt {

enum class EnvelopeShape { SinSquared, Gaussian, FermiDirac };

std::string_view to_string(EnvelopeShape shape);
std::optional<EnvelopeShape> parse_envelope_shape(std::string_view name);

/// Linearly polarized (z) pulse propagating along x. The vector potential is
/// A(t) = (E0/omega) f(t) sin(omega t + cep). All quantities in atomic units.
struct Pulse {
  EnvelopeShape shape = EnvelopeShape::SinSquared;
  double e0 = 0.0;
  double omega = 1.0;
  double cep = 0.0;
  /// Total length (sin^2), FWHM (Gaussian) or the plateau parameter (Fermi-Dirac).
  double duration = 1.0;
  /// Edge steepness, Fermi-Dirac only.
  double sigma = 1.0;
  double t_start = 0.0;
  double t_end = 1.0;

  /// Builds a pulse with the default simulation window of its shape:
  /// [0, T] for sin^2, +-3T for the Gaussian, [-T/2 - 10/sigma, T/2 + 10/sigma]
  /// for Fermi-Dirac.
  static Pulse make(EnvelopeShape shape, double e0, double omega, double duration,
                    double cep = 0.0, double sigma = 1.0);

  /// Same, with the duration given in optical cycles of the carrier.
  static Pulse from_cycles(EnvelopeShape shape, double e0, double omega, double n_cycles,
                           double cep = 0.0, double sigma = 1.0);

  /// Throws ConfigError when an invariant is broken.
  void validate() const;

  double window() const { return t_end - t_start; }
};

/// Time-dependent scalars multiplying the interaction operators.
struct CouplingScalars {
  double a = 0.0;         // A(t)
  double a_aprime = 0.0;  // A(t) A'(t)
  double f2 = 0.0;        // f(t)^2
  double f_fprime = 0.0;  // f(t) f'(t)
  double f2_cos2 = 0.0;   // f(t)^2 cos(2 omega t + 2 cep)
};

double envelope(const Pulse& pulse, double t);
double envelope_deriv(const Pulse& pulse, double t);
double vector_potential(const Pulse& pulse, double t);
CouplingScalars coupling_scalars(const Pulse& pulse, double t);

}  // namespace ndt
