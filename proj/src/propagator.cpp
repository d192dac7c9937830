// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include "ndtdse/propagator.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ndtdse/constants.hpp"
#include "ndtdse/errors.hpp"

namespace ndt {

void PropagatorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("propagator: dt must be > 0");
  if (krylov_dim_max < 2 || krylov_dim_max > 200)
    throw ConfigError("propagator: krylov_dim_max must be in [2, 200]");
  if (!(krylov_tol > 0.0)) throw ConfigError("propagator: krylov_tol must be > 0");
  if (mask && !(mask->exponent > 0.0)) throw ConfigError("propagator: mask exponent must be > 0");
}

double default_time_step(const Pulse& pulse) { return 2.0 * units::kPi / pulse.omega / 200.0; }

StepStats step(const Hamiltonian& h, WavefunctionState& psi, double dt,
               const PropagatorConfig& cfg) {
  StepStats stats;
  const double beta0 = psi.coeffs.norm();
  if (beta0 == 0.0 || dt == 0.0) {
    psi.t += dt;
    return stats;
  }
  const double t_mid = psi.t + 0.5 * dt;
  const Eigen::Index dim = psi.coeffs.size();
  const int m_max = cfg.krylov_dim_max;

  Eigen::MatrixXcd basis(dim, m_max + 1);
  basis.col(0) = psi.coeffs / beta0;
  std::vector<double> alpha, beta;
  Eigen::VectorXcd w(dim), y;
  Eigen::VectorXcd proj;
  Eigen::VectorXd coeffs;

  for (int j = 0; j < m_max; ++j) {
    h.apply(basis.col(j), t_mid, w);
    // Classical Gram-Schmidt, applied twice.
    auto done = basis.leftCols(j + 1);
    proj.noalias() = done.adjoint() * w;
    w.noalias() -= done * proj;
    const double a = proj(j).real();
    proj.noalias() = done.adjoint() * w;
    w.noalias() -= done * proj;
    alpha.push_back(a + proj(j).real());
    const double b = w.norm();
    const int m = j + 1;

    // Exponential of the symmetric tridiagonal projection.
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) t(i + 1, i) = t(i, i + 1) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const Eigen::MatrixXd& q = eig.eigenvectors();
    Eigen::VectorXcd phase(m);
    for (int i = 0; i < m; ++i)
      phase(i) = std::polar(1.0, -dt * eig.eigenvalues()(i)) * q(0, i);
    y = q.cast<std::complex<double>>() * phase;

    const double residual = beta0 * b * std::abs(y(m - 1));
    stats.krylov_dim = m;
    stats.residual = residual;
    if (residual < cfg.krylov_tol || b < 1e-14 * beta0) break;
    if (m == m_max) {
      std::ostringstream msg;
      msg << "Krylov subspace did not converge at t=" << psi.t << " (dim " << m
          << ", residual estimate " << residual << ")";
      throw NumericalError(msg.str());
    }
    beta.push_back(b);
    basis.col(j + 1) = w / b;
  }
  psi.coeffs.noalias() = beta0 * (basis.leftCols(stats.krylov_dim) * y);
  if (cfg.renormalize) psi.coeffs *= beta0 / psi.coeffs.norm();
  psi.t += dt;
  return stats;
}

Mask::Mask(const Discretization& disc, const MaskSettings& settings) : disc_(&disc) {
  const double r_max = disc.radial.r_max();
  if (settings.r_on >= r_max) {
    identity_ = true;
    return;
  }
  const double r_on = std::max(0.0, settings.r_on);
  const double p = settings.exponent;
  const BandMatrix m = assemble_weighted(disc.radial, [&](double r) {
    if (r <= r_on) return 1.0;
    const double c = std::cos(0.5 * units::kPi * (r - r_on) / (r_max - r_on));
    return std::pow(std::max(c, 0.0), p);
  });
  blocks_.reserve(disc.spectra.size());
  for (const auto& s : disc.spectra) blocks_.push_back(project_operator(s, s, m));
}

double Mask::apply(WavefunctionState& psi) const {
  if (identity_) return 0.0;
  const double before = psi.norm_sq();
  const Discretization& d = *disc_;
  const ChannelBasis& ch = d.channels;
  for (int l = 0; l <= ch.l_max(); ++l) {
    Eigen::Map<Eigen::MatrixXcd> c(psi.coeffs.data() + d.offsets[ch.first_of_l(l)], d.n_states(l),
                                   ch.count_of_l(l));
    const Eigen::MatrixXcd masked = blocks_[l] * c;
    c = masked;
  }
  return before - psi.norm_sq();
}

WavefunctionState apply_mask(const WavefunctionState& psi, const Discretization& disc,
                             const MaskSettings& mask) {
  WavefunctionState out = psi;
  Mask(disc, mask).apply(out);
  return out;
}

TimeGrid make_time_grid(const Pulse& pulse, double requested_dt) {
  TimeGrid g;
  g.t_start = pulse.t_start;
  const double window = pulse.window();
  g.n_steps = static_cast<std::int64_t>(std::ceil(window / requested_dt - 1e-9));
  if (g.n_steps < 1) g.n_steps = 1;
  g.dt = window / static_cast<double>(g.n_steps);
  return g;
}

namespace {

double m_nonzero_population(const Discretization& d, const Eigen::VectorXcd& c) {
  double sum = 0.0;
  for (int ch = 0; ch < d.channels.size(); ++ch)
    if (d.channels[ch].m != 0)
      sum += c.segment(d.offsets[ch], d.offsets[ch + 1] - d.offsets[ch]).squaredNorm();
  return sum;
}

}  // namespace

RunTrace propagate(const Hamiltonian& h, const WavefunctionState& psi0, const TimeGrid& grid,
                   const PropagatorConfig& cfg, const ProbeSpec& probes,
                   const StepCallback& on_step) {
  const Discretization& d = h.discretization();
  if (psi0.coeffs.size() != d.dim())
    throw ConfigError("propagate: state dimension does not match the Hamiltonian");
  const double k_real = (psi0.t - grid.t_start) / grid.dt;
  const auto k0 = static_cast<std::int64_t>(std::llround(k_real));
  if (std::abs(k_real - static_cast<double>(k0)) > 1e-6 || k0 < 0 || k0 > grid.n_steps)
    throw ConfigError("propagate: initial time is not on the time grid");

  std::optional<Mask> mask;
  if (cfg.mask) mask.emplace(d, *cfg.mask);

  RunTrace trace;
  trace.final_state = psi0;
  WavefunctionState& psi = trace.final_state;
  psi.t = grid.time(k0);
  const Eigen::Index ground = d.state_index(0, 0, 0);
  const int stride = std::max(1, probes.stride);
  auto record = [&] {
    trace.times.push_back(psi.t);
    trace.m_population.push_back(m_nonzero_population(d, psi.coeffs));
    trace.norm.push_back(psi.norm_sq());
    trace.ground_population.push_back(std::norm(psi.coeffs(ground)));
  };
  record();
  double krylov_sum = 0.0;
  for (std::int64_t k = k0; k < grid.n_steps; ++k) {
    psi.t = grid.time(k);
    StepStats s;
    try {
      s = step(h, psi, grid.dt, cfg);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " [step " + std::to_string(k) + "]");
    }
    psi.t = grid.time(k + 1);
    if (mask) trace.absorbed += mask->apply(psi);
    krylov_sum += s.krylov_dim;
    trace.max_krylov_dim = std::max(trace.max_krylov_dim, s.krylov_dim);
    trace.max_residual = std::max(trace.max_residual, s.residual);
    ++trace.steps_taken;
    if ((k + 1 - k0) % stride == 0 || k + 1 == grid.n_steps) record();
    if (on_step) on_step(k + 1, psi);
  }
  if (trace.steps_taken > 0) trace.mean_krylov_dim = krylov_sum / trace.steps_taken;
  return trace;
}

// ---- checkpoints ---------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'N', 'D', 'T', 'S'};

template <typename T>
T little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    v = std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& os, T v) {
  v = little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return little(v);
}

std::uint64_t mix(std::uint64_t h, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    h ^= (bits >> (8 * i)) & 0xffu;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::uint64_t pulse_hash(const Pulse& p) {
  std::uint64_t h = 1469598103934665603ULL;
  h = mix(h, static_cast<double>(static_cast<int>(p.shape)));
  for (double v : {p.e0, p.omega, p.cep, p.duration, p.sigma, p.t_start, p.t_end}) h = mix(h, v);
  return h;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                      const WavefunctionState& psi) {
  const auto tmp = path.string() + ".partial";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
    os.write(kCheckpointMagic, 4);
    put<std::uint32_t>(os, header.version);
    put<std::uint32_t>(os, header.n_channels);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(psi.coeffs.size()));
    put<std::uint64_t>(os, std::bit_cast<std::uint64_t>(psi.t));
    put<std::uint64_t>(os, header.pulse_hash);
    put<std::uint64_t>(os, header.config_hash);
    for (Eigen::Index i = 0; i < psi.coeffs.size(); ++i) {
      put<std::uint64_t>(os, std::bit_cast<std::uint64_t>(psi.coeffs(i).real()));
      put<std::uint64_t>(os, std::bit_cast<std::uint64_t>(psi.coeffs(i).imag()));
    }
    if (!os) throw IoError("failed writing checkpoint: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

WavefunctionState read_checkpoint(const std::filesystem::path& path, CheckpointHeader* header) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw IoError("not a checkpoint file: " + path.string());
  CheckpointHeader h;
  h.version = get<std::uint32_t>(is);
  if (h.version != 1) throw IoError("unsupported checkpoint version in " + path.string());
  h.n_channels = get<std::uint32_t>(is);
  h.n_coeffs = get<std::uint64_t>(is);
  h.t = std::bit_cast<double>(get<std::uint64_t>(is));
  h.pulse_hash = get<std::uint64_t>(is);
  h.config_hash = get<std::uint64_t>(is);
  if (!is || h.n_coeffs > (std::uint64_t{1} << 34)) throw IoError("corrupt checkpoint header: " + path.string());
  WavefunctionState psi;
  psi.t = h.t;
  psi.coeffs.resize(static_cast<Eigen::Index>(h.n_coeffs));
  for (Eigen::Index i = 0; i < psi.coeffs.size(); ++i) {
    const double re = std::bit_cast<double>(get<std::uint64_t>(is));
    const double im = std::bit_cast<double>(get<std::uint64_t>(is));
    psi.coeffs(i) = {re, im};
  }
  if (!is) throw IoError("truncated checkpoint: " + path.string());
  if (header) *header = h;
  return psi;
}

}  // namespace ndt
