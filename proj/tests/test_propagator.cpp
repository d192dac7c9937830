// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>

#include <doctest.h>

#include "ndtdse/constants.hpp"
#include "ndtdse/errors.hpp"
#include "ndtdse/propagator.hpp"

using namespace ndt;
using doctest::Approx;
using cplx = std::complex<double>;

namespace {

std::shared_ptr<const Discretization> small_basis(int l_max = 4, int m_max = 2, double r_max = 40) {
  BasisSettings s;
  s.r_max = r_max;
  s.l_max = l_max;
  s.m_max = m_max;
  s.symmetry = ChannelSymmetry::ReflectionEven;
  return build_discretization(s);
}

PropagatorConfig config_for(const Pulse& p) {
  PropagatorConfig c;
  c.dt = default_time_step(p);
  return c;
}

// Outgoing s-wave packet centred at r0 with momentum k, in the working basis.
WavefunctionState outgoing_packet(const Discretization& d, double r0, double k, double w) {
  const Eigen::VectorXd re = fit_function(d.radial, d.ops, [&](double r) {
    return std::exp(-(r - r0) * (r - r0) / (2 * w * w)) * std::cos(k * r);
  });
  const Eigen::VectorXd im = fit_function(d.radial, d.ops, [&](double r) {
    return std::exp(-(r - r0) * (r - r0) / (2 * w * w)) * std::sin(k * r);
  });
  Eigen::VectorXd s_re(re.size()), s_im(im.size());
  s_re.setZero();
  s_im.setZero();
  d.ops.S.apply_add(re, s_re, 1.0);
  d.ops.S.apply_add(im, s_im, 1.0);
  WavefunctionState psi;
  psi.coeffs = Eigen::VectorXcd::Zero(d.dim());
  const Eigen::Index off = d.offsets[d.channels.index(0, 0)];
  const Eigen::MatrixXd& v = d.spectra[0].vectors;
  psi.coeffs.segment(off, d.n_states(0)).real() = v.transpose() * s_re;
  psi.coeffs.segment(off, d.n_states(0)).imag() = v.transpose() * s_im;
  psi.coeffs /= psi.coeffs.norm();
  return psi;
}

}  // namespace

TEST_CASE("config validation") {
  PropagatorConfig c;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.dt = 0.01;
  CHECK_NOTHROW(c.validate());
  c.krylov_dim_max = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.krylov_dim_max = 201;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 1.0, 3.5, 10);
  CHECK(default_time_step(p) == Approx(2 * units::kPi / 3.5 / 200));
}

TEST_CASE("stationary ground state") {
  const auto d = small_basis();
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 0.0, 1.0, 2);
  const Hamiltonian h(InteractionModel::FirstOrder, p, d);
  const double e0 = d->spectra[0].energies(0);
  for (double dt : {0.01, 0.3, 2.0}) {
    WavefunctionState psi = ground_state(*d, 0.0);
    const WavefunctionState start = psi;
    step(h, psi, dt, config_for(p));
    const cplx overlap = start.coeffs.dot(psi.coeffs);
    CHECK(std::abs(std::abs(overlap) - 1.0) < 1e-12);
    CHECK(std::abs(overlap - std::polar(1.0, -e0 * dt)) < 1e-12);
    CHECK(psi.t == Approx(dt));
  }
  CHECK(e0 == Approx(-0.5).epsilon(1e-7));
}

TEST_CASE("per-step norm conservation") {
  const auto d = small_basis();
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 20.0, 3.5, 3);
  const PropagatorConfig cfg = config_for(p);
  for (auto model : kAllModels) {
    const Hamiltonian h(model, p, d);
    WavefunctionState psi = ground_state(*d, 0.0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double before = psi.coeffs.norm();
      step(h, psi, cfg.dt, cfg);
      worst = std::max(worst, std::abs(psi.coeffs.norm() - before));
    }
    CHECK(worst < 1e-13);
  }
}

TEST_CASE("local error order of the midpoint step") {
  const auto d = small_basis(3, 1, 30);
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 2.0, 1.0, 2);
  const Hamiltonian h(InteractionModel::FirstOrder, p, d);
  PropagatorConfig cfg = config_for(p);
  cfg.krylov_tol = 1e-15;
  // Start from a state that has been driven for a while.
  WavefunctionState start = ground_state(*d, 0.0);
  const TimeGrid grid = make_time_grid(p, p.window() / 400);
  for (int i = 0; i < 150; ++i) step(h, start, grid.dt, cfg);
  std::vector<double> log_dt, log_err;
  for (int e = 8; e <= 12; ++e) {
    const double dt = p.duration / std::pow(2.0, e);
    WavefunctionState one = start, two = start;
    step(h, one, dt, cfg);
    step(h, two, dt / 2, cfg);
    step(h, two, dt / 2, cfg);
    log_dt.push_back(std::log(dt));
    log_err.push_back(std::log((one.coeffs - two.coeffs).norm()));
  }
  const double mx = std::accumulate(log_dt.begin(), log_dt.end(), 0.0) / log_dt.size();
  const double my = std::accumulate(log_err.begin(), log_err.end(), 0.0) / log_err.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < log_dt.size(); ++i) {
    sxy += (log_dt[i] - mx) * (log_err[i] - my);
    sxx += (log_dt[i] - mx) * (log_dt[i] - mx);
  }
  const double order = sxy / sxx;
  MESSAGE("observed local order " << order);
  CHECK(order >= 2.9);
}

TEST_CASE("time reversal") {
  const auto d = small_basis();
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 15.0, 3.5, 2);
  const PropagatorConfig cfg = config_for(p);
  for (auto model : {InteractionModel::FirstOrder, InteractionModel::PGFull}) {
    const Hamiltonian h(model, p, d);
    WavefunctionState psi = ground_state(*d, 0.0);
    const WavefunctionState start = psi;
    for (int i = 0; i < 100; ++i) step(h, psi, cfg.dt, cfg);
    for (int i = 0; i < 100; ++i) step(h, psi, -cfg.dt, cfg);
    CHECK(1.0 - std::norm(start.coeffs.dot(psi.coeffs)) < 1e-8);
    CHECK(std::abs(psi.t) < 1e-12);
  }
}

TEST_CASE("propagate over a pulse") {
  const auto d = small_basis(4, 2);
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 1.0, 3.5, 10);
  const PropagatorConfig cfg = config_for(p);
  const TimeGrid grid = make_time_grid(p, cfg.dt);
  CHECK(grid.time(grid.n_steps) == Approx(p.t_end).epsilon(1e-14));
  CHECK(grid.dt <= cfg.dt);

  const Hamiltonian dip(InteractionModel::Dipole, p, d);
  const RunTrace tr = propagate(dip, ground_state(*d, p.t_start), grid, cfg, ProbeSpec{20});
  CHECK(tr.steps_taken == grid.n_steps);
  CHECK(tr.final_state.t == Approx(p.t_end));
  for (double m : tr.m_population) CHECK(m == 0.0);
  CHECK(tr.times.front() == p.t_start);
  CHECK(tr.times.back() == Approx(p.t_end));
  CHECK(std::abs(1.0 - tr.norm.back()) < 1e-10);
  CHECK(tr.mean_krylov_dim > 1.0);

  const Hamiltonian fo(InteractionModel::FirstOrder, p, d);
  const RunTrace t2 = propagate(fo, ground_state(*d, p.t_start), grid, cfg, ProbeSpec{20});
  CHECK(t2.m_population.back() > 0.0);

  // Starting at the end of the window takes no steps.
  WavefunctionState done = ground_state(*d, p.t_end);
  const RunTrace t3 = propagate(fo, done, grid, cfg, ProbeSpec{});
  CHECK(t3.steps_taken == 0);
  CHECK(t3.final_state.coeffs == done.coeffs);

  WavefunctionState off = ground_state(*d, p.t_start + 0.37 * grid.dt);
  CHECK_THROWS_AS(propagate(fo, off, grid, cfg, ProbeSpec{}), ConfigError);
}

TEST_CASE("Krylov non-convergence is reported") {
  const auto d = small_basis();
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 20.0, 3.5, 2);
  const Hamiltonian h(InteractionModel::FirstOrder, p, d);
  PropagatorConfig cfg = config_for(p);
  cfg.krylov_dim_max = 3;
  WavefunctionState psi = ground_state(*d, 0.3);
  try {
    step(h, psi, 0.5, cfg);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("mask") {
  const auto d = small_basis(2, 0, 80);
  const WavefunctionState g = ground_state(*d, 0.0);
  const WavefunctionState same = apply_mask(g, *d, MaskSettings{80.0, 0.125});
  CHECK(same.coeffs == g.coeffs);
  const WavefunctionState masked = apply_mask(g, *d, MaskSettings{50.0, 0.125});
  CHECK(std::abs(masked.norm_sq() - g.norm_sq()) < 1e-12);

  // Outgoing packet: norm never increases while it crosses the absorber.
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 0.0, 1.0, 10);
  const Hamiltonian h(InteractionModel::Dipole, p, d);
  PropagatorConfig cfg = config_for(p);
  cfg.mask = MaskSettings{50.0, 0.125};
  const Mask mask(*d, *cfg.mask);
  WavefunctionState psi = outgoing_packet(*d, 35.0, 2.0, 3.0);
  double prev = psi.norm_sq();
  double absorbed = 0.0;
  bool monotone = true;
  for (int i = 0; i < 100; ++i) {
    step(h, psi, 0.25, cfg);
    absorbed += mask.apply(psi);
    // Allowance: the unitary part of a step conserves the norm to 1e-13.
    monotone = monotone && psi.norm_sq() <= prev + 1e-13;
    prev = psi.norm_sq();
  }
  CHECK(monotone);
  CHECK(psi.norm_sq() < 0.5);
  CHECK(std::abs(absorbed - (1.0 - psi.norm_sq())) < 1e-12);
}

TEST_CASE("absorbed fraction bookkeeping in propagate") {
  const auto d = small_basis(3, 1, 40);
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 8.0, 3.5, 6);
  PropagatorConfig cfg = config_for(p);
  cfg.mask = MaskSettings{20.0, 0.125};
  const Hamiltonian h(InteractionModel::FirstOrder, p, d);
  const RunTrace tr = propagate(h, ground_state(*d, p.t_start), make_time_grid(p, cfg.dt), cfg, ProbeSpec{});
  CHECK(tr.final_state.norm_sq() < 1.0);
  CHECK(tr.absorbed > 0.0);
  CHECK(std::abs(tr.absorbed - (1.0 - tr.final_state.norm_sq())) < 1e-12);
}

TEST_CASE("checkpoint round-trip and bitwise resume") {
  const auto d = small_basis(3, 1);
  const Pulse p = Pulse::from_cycles(EnvelopeShape::SinSquared, 5.0, 3.5, 2);
  const PropagatorConfig cfg = config_for(p);
  const TimeGrid grid = make_time_grid(p, cfg.dt);
  const Hamiltonian h(InteractionModel::EnvelopeVG, p, d);
  const auto path = std::filesystem::temp_directory_path() / "ndt_ckpt_test.bin";

  const std::int64_t half = grid.n_steps / 2;
  CheckpointHeader header;
  header.n_channels = static_cast<std::uint32_t>(d->channels.size());
  header.pulse_hash = pulse_hash(p);
  header.config_hash = 0x1234;
  const RunTrace full = propagate(h, ground_state(*d, p.t_start), grid, cfg, ProbeSpec{},
                                  [&](std::int64_t k, const WavefunctionState& psi) {
                                    if (k == half) write_checkpoint(path, header, psi);
                                  });
  CheckpointHeader back;
  const WavefunctionState mid = read_checkpoint(path, &back);
  CHECK(back.n_channels == header.n_channels);
  CHECK(back.n_coeffs == static_cast<std::uint64_t>(d->dim()));
  CHECK(back.pulse_hash == header.pulse_hash);
  CHECK(back.config_hash == 0x1234u);
  CHECK(mid.t == grid.time(half));

  const RunTrace resumed = propagate(h, mid, grid, cfg, ProbeSpec{});
  CHECK(resumed.steps_taken == grid.n_steps - half);
  REQUIRE(resumed.final_state.coeffs.size() == full.final_state.coeffs.size());
  CHECK(std::memcmp(resumed.final_state.coeffs.data(), full.final_state.coeffs.data(),
                    sizeof(cplx) * full.final_state.coeffs.size()) == 0);

  // Re-encoding the decoded state gives identical bytes.
  const auto path2 = std::filesystem::temp_directory_path() / "ndt_ckpt_test2.bin";
  write_checkpoint(path2, back, mid);
  CHECK(std::filesystem::file_size(path) == std::filesystem::file_size(path2));
  const WavefunctionState again = read_checkpoint(path2);
  CHECK(std::memcmp(again.coeffs.data(), mid.coeffs.data(), sizeof(cplx) * mid.coeffs.size()) == 0);

  std::filesystem::remove(path);
  std::filesystem::remove(path2);
  CHECK_THROWS_AS(read_checkpoint(path), IoError);
  CHECK(pulse_hash(p) != pulse_hash(Pulse::from_cycles(EnvelopeShape::SinSquared, 5.0, 3.5, 3)));
}
