// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include "ndtdse/pulse.hpp"

#include <cmath>
#include <numbers>

#include "ndtdse/constants.hpp"
#include "ndtdse/errors.hpp"

namespace ndt {

namespace {

double logistic(double x) {
  // 1 / (1 + e^{-x}) without overflow for large |x|.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct EnvelopeValue {
  double f = 0.0;
  double df = 0.0;
};

EnvelopeValue evaluate(const Pulse& p, double t) {
  switch (p.shape) {
    case EnvelopeShape::SinSquared: {
      if (t <= 0.0 || t >= p.duration) return {};
      const double x = units::kPi * t / p.duration;
      const double s = std::sin(x);
      return {s * s, units::kPi / p.duration * std::sin(2.0 * x)};
    }
    case EnvelopeShape::Gaussian: {
      const double k = 4.0 * std::numbers::ln2 / (p.duration * p.duration);
      const double f = std::exp(-k * t * t);
      return {f, -2.0 * k * t * f};
    }
    case EnvelopeShape::FermiDirac: {
      const double half = 0.5 * p.duration;
      const double norm = 1.0 + std::exp(-p.sigma * half);
      // 1/(e^x + 1) == logistic(-x)
      const double x1 = p.sigma * (t - half);
      const double x2 = p.sigma * (-t - half);
      const double f = norm * norm * logistic(-x1) * logistic(-x2);
      return {f, -p.sigma * f * (logistic(x1) - logistic(x2))};
    }
  }
  return {};
}

}  // namespace

std::string_view to_string(EnvelopeShape shape) {
  switch (shape) {
    case EnvelopeShape::SinSquared: return "sin2";
    case EnvelopeShape::Gaussian: return "gaussian";
    case EnvelopeShape::FermiDirac: return "fermi_dirac";
  }
  return "?";
}

std::optional<EnvelopeShape> parse_envelope_shape(std::string_view name) {
  if (name == "sin2" || name == "sin_squared") return EnvelopeShape::SinSquared;
  if (name == "gaussian") return EnvelopeShape::Gaussian;
  if (name == "fermi_dirac") return EnvelopeShape::FermiDirac;
  return std::nullopt;
}

Pulse Pulse::make(EnvelopeShape shape, double e0, double omega, double duration, double cep,
                  double sigma) {
  Pulse p;
  p.shape = shape;
  p.e0 = e0;
  p.omega = omega;
  p.duration = duration;
  p.cep = cep;
  p.sigma = sigma;
  switch (shape) {
    case EnvelopeShape::SinSquared:
      p.t_start = 0.0;
      p.t_end = duration;
      break;
    case EnvelopeShape::Gaussian:
      p.t_start = -3.0 * duration;
      p.t_end = 3.0 * duration;
      break;
    case EnvelopeShape::FermiDirac:
      p.t_end = 0.5 * duration + 10.0 / sigma;
      p.t_start = -p.t_end;
      break;
  }
  return p;
}

Pulse Pulse::from_cycles(EnvelopeShape shape, double e0, double omega, double n_cycles,
                         double cep, double sigma) {
  return make(shape, e0, omega, n_cycles * 2.0 * units::kPi / omega, cep, sigma);
}

void Pulse::validate() const {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigError("pulse: omega must be > 0");
  if (!(e0 >= 0.0) || !std::isfinite(e0)) throw ConfigError("pulse: e0 must be >= 0");
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw ConfigError("pulse: duration must be > 0");
  if (shape == EnvelopeShape::FermiDirac && !(sigma > 0.0))
    throw ConfigError("pulse: sigma must be > 0 for the fermi_dirac envelope");
  if (!std::isfinite(cep)) throw ConfigError("pulse: cep must be finite");
  if (!(t_start < t_end)) throw ConfigError("pulse: t_start must be < t_end");
}

double envelope(const Pulse& pulse, double t) { return evaluate(pulse, t).f; }

double envelope_deriv(const Pulse& pulse, double t) { return evaluate(pulse, t).df; }

double vector_potential(const Pulse& pulse, double t) {
  return pulse.e0 / pulse.omega * envelope(pulse, t) * std::sin(pulse.omega * t + pulse.cep);
}

CouplingScalars coupling_scalars(const Pulse& pulse, double t) {
  const auto [f, df] = evaluate(pulse, t);
  const double phase = pulse.omega * t + pulse.cep;
  const double s = std::sin(phase);
  const double c = std::cos(phase);
  const double amp = pulse.e0 / pulse.omega;
  CouplingScalars out;
  out.a = amp * f * s;
  const double aprime = amp * (df * s + f * pulse.omega * c);
  out.a_aprime = out.a * aprime;
  out.f2 = f * f;
  out.f_fprime = f * df;
  out.f2_cos2 = f * f * std::cos(2.0 * phase);
  return out;
}

}  // namespace ndt
