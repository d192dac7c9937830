// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include "ndtdse/observables.hpp"

#include <algorithm>
#include <cmath>

#include "ndtdse/constants.hpp"
#include "ndtdse/errors.hpp"
#include "ndtdse/quadrature.hpp"

namespace ndt {

using cplx = std::complex<double>;

double SpectralProjection::bound_population() const {
  double sum = 0.0;
  const ChannelBasis& ch = disc->channels;
  for (int c = 0; c < ch.size(); ++c) {
    const int nb = disc->spectra[ch[c].l].n_bound();
    sum += amplitudes.segment(disc->offsets[c], nb).squaredNorm();
  }
  return sum;
}

double SpectralProjection::continuum_population() const {
  return amplitudes.squaredNorm() - bound_population();
}

SpectralProjection project(const WavefunctionState& psi, const Discretization& disc,
                           double absorbed) {
  if (psi.coeffs.size() != disc.dim())
    throw ConfigError("project: state and spectra belong to different bases");
  SpectralProjection p;
  p.disc = &disc;
  p.amplitudes = psi.coeffs;
  p.t = psi.t;
  p.absorbed = absorbed;
  return p;
}

double ionization_probability(const SpectralProjection& proj) {
  return proj.continuum_population() + proj.absorbed;
}

double m_population(const WavefunctionState& psi, const Discretization& d) {
  double sum = 0.0;
  for (int c = 0; c < d.channels.size(); ++c)
    if (d.channels[c].m != 0)
      sum += psi.coeffs.segment(d.offsets[c], d.offsets[c + 1] - d.offsets[c]).squaredNorm();
  return sum;
}

StateCells continuum_cells(const ChannelSpectrum& s) {
  StateCells cells;
  const int nb = s.n_bound();
  const int n = s.size();
  for (int i = nb; i < n; ++i) {
    const double e = s.energies(i);
    double lo = i > 0 ? 0.5 * (s.energies(i - 1) + e) : 0.0;
    double hi = i + 1 < n ? 0.5 * (e + s.energies(i + 1)) : 0.0;
    if (i + 1 == n) hi = e + (e - lo);
    if (i == nb) lo = std::max(lo, 0.0);
    if (!(hi > lo) || (i > nb && !(e > s.energies(i - 1))))
      throw NumericalError("degenerate continuum spacing at E=" + std::to_string(e) +
                           " (l=" + std::to_string(s.l) + ")");
    cells.state.push_back(i);
    cells.lo.push_back(lo);
    cells.hi.push_back(hi);
  }
  return cells;
}

EnergyGrid make_energy_grid(double e_max, double de) {
  if (!(de > 0.0) || !(e_max > de)) throw ConfigError("energy grid: need 0 < de < e_max");
  EnergyGrid g;
  g.de = de;
  g.n_bins = static_cast<int>(std::ceil(e_max / de - 1e-9));
  return g;
}

double EnergySpectrum::integral() const {
  double sum = 0.0;
  for (double v : total) sum += v;
  return sum * grid.de;
}

EnergySpectrum energy_spectrum(const SpectralProjection& proj, const EnergyGrid& grid) {
  const Discretization& d = *proj.disc;
  const ChannelBasis& ch = d.channels;
  EnergySpectrum out;
  out.grid = grid;
  out.total.assign(grid.n_bins, 0.0);
  out.per_l.assign(ch.l_max() + 1, std::vector<double>(grid.n_bins, 0.0));
  const double e_top = grid.n_bins * grid.de;
  for (int l = 0; l <= ch.l_max(); ++l) {
    const StateCells cells = continuum_cells(d.spectra[l]);
    std::vector<double>& dst = out.per_l[l];
    for (std::size_t k = 0; k < cells.state.size(); ++k) {
      double pop = 0.0;
      for (int c = ch.first_of_l(l); c < ch.first_of_l(l) + ch.count_of_l(l); ++c)
        pop += std::norm(proj.amplitudes(d.offsets[c] + cells.state[k]));
      const double lo = cells.lo[k], hi = std::min(cells.hi[k], e_top);
      if (lo >= e_top || pop == 0.0) continue;
      const double density = pop / (cells.hi[k] - cells.lo[k]);
      const int b0 = std::max(0, static_cast<int>(std::floor(lo / grid.de)));
      const int b1 = std::min(grid.n_bins - 1, static_cast<int>(std::floor(hi / grid.de)));
      for (int b = b0; b <= b1; ++b) {
        const double overlap = std::min(hi, grid.lo(b) + grid.de) - std::max(lo, grid.lo(b));
        if (overlap > 0.0) dst[b] += density * overlap / grid.de;
      }
    }
    for (int b = 0; b < grid.n_bins; ++b) out.total[b] += dst[b];
  }
  return out;
}

double coulomb_phase(int l, double charge, double k) {
  // arg Gamma(1 + i y), y = -Z/k, from Stirling's series at 1 + N + i y and
  // the recursion Gamma(z + 1) = z Gamma(z); then the upward recursion in l.
  const double y = -charge / k;
  constexpr int kShift = 12;
  const cplx w(1.0 + kShift, y);
  const cplx w2 = w * w;
  const cplx series = 1.0 / (12.0 * w) - 1.0 / (360.0 * w * w2) + 1.0 / (1260.0 * w * w2 * w2) -
                      1.0 / (1680.0 * w * w2 * w2 * w2);
  double arg = ((w - 0.5) * std::log(w) - w + series).imag();
  for (int j = 0; j < kShift; ++j) arg -= std::atan2(y, 1.0 + j);
  for (int s = 1; s <= l; ++s) arg += std::atan2(y, static_cast<double>(s));
  return arg;
}

double AngularDistribution::integral() const {
  return integral_where([](double, double) { return true; });
}

double AngularDistribution::integral_where(const std::function<bool(double, double)>& keep) const {
  const double dphi = 2.0 * units::kPi / static_cast<double>(phi.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i)
    for (std::size_t j = 0; j < phi.size(); ++j)
      if (keep(theta[i], phi[j])) sum += theta_weight[i] * dphi * dp(i, j);
  return sum;
}

namespace {

// Normalized associated Legendre values Ybar_l^m(theta) = Y_lm(theta, 0) for m >= 0,
// with the Condon-Shortley phase, for all l <= l_max.
Eigen::MatrixXd legendre_table(int l_max, double theta) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(l_max + 1, l_max + 1);
  for (int l = 0; l <= l_max; ++l)
    for (int m = 0; m <= l; ++m) p(l, m) = std::sph_legendre(l, m, theta);
  return p;
}

}  // namespace

AngularDistribution angular_distribution(const SpectralProjection& proj, double charge,
                                         const AngularOptions& opt) {
  const Discretization& d = *proj.disc;
  const ChannelBasis& ch = d.channels;
  const int l_max = ch.l_max();
  const int m_max = ch.m_max();
  if (opt.n_theta < 2 || opt.n_phi < 2 * m_max + 1)
    throw ConfigError("angular mesh too coarse for m_max=" + std::to_string(m_max));

  AngularDistribution out;
  const QuadratureRule gl = gauss_legendre(opt.n_theta);
  for (int i = opt.n_theta - 1; i >= 0; --i) {
    out.theta.push_back(std::acos(gl.nodes[i]));
    out.theta_weight.push_back(gl.weights[i]);
  }
  for (int j = 0; j < opt.n_phi; ++j) out.phi.push_back(2.0 * units::kPi * j / opt.n_phi);
  out.dp = Eigen::MatrixXd::Zero(opt.n_theta, opt.n_phi);

  std::vector<Eigen::MatrixXd> legendre;
  for (double th : out.theta) legendre.push_back(legendre_table(l_max, th));

  // Energy pieces: the common refinement of every partial wave's cells.
  std::vector<StateCells> cells(l_max + 1);
  std::vector<double> edges;
  for (int l = 0; l <= l_max; ++l) {
    cells[l] = continuum_cells(d.spectra[l]);
    for (std::size_t k = 0; k < cells[l].lo.size(); ++k) {
      edges.push_back(cells[l].lo[k]);
      edges.push_back(cells[l].hi[k]);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  // Complex-m amplitudes c_{l,m}(piece), m in [-m_max, m_max].
  const int nm = 2 * m_max + 1;
  Eigen::MatrixXcd amp(l_max + 1, nm);
  std::vector<std::size_t> cursor(l_max + 1, 0);
  const double dt_free = proj.t - opt.t_ref;
  const cplx mi(0.0, -1.0);
  Eigen::MatrixXcd g(opt.n_theta, nm);

  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double lo = edges[e], hi = edges[e + 1];
    if (lo >= opt.e_max) break;
    const double width = std::min(hi, opt.e_max) - lo;
    if (width <= 0.0) continue;
    const double mid = 0.5 * (lo + hi);
    const double k = std::sqrt(2.0 * mid);
    amp.setZero();
    bool any = false;
    for (int l = 0; l <= l_max; ++l) {
      const StateCells& c = cells[l];
      std::size_t& q = cursor[l];
      while (q < c.hi.size() && c.hi[q] <= mid) ++q;
      if (q >= c.hi.size() || c.lo[q] > mid) continue;
      const int n = c.state[q];
      const double energy = d.spectra[l].energies(n);
      const cplx phase = std::pow(mi, l) * std::polar(1.0, coulomb_phase(l, charge, k)) *
                         std::polar(1.0, energy * dt_free) / std::sqrt(c.hi[q] - c.lo[q]);
      for (int cc = ch.first_of_l(l); cc < ch.first_of_l(l) + ch.count_of_l(l); ++cc) {
        const cplx a = proj.amplitudes(d.offsets[cc] + n) * phase;
        if (a == 0.0) continue;
        any = true;
        const int m = ch[cc].m;
        if (ch.symmetry() == ChannelSymmetry::ReflectionEven && m > 0) {
          const double sign = (m % 2) ? -1.0 : 1.0;
          amp(l, m_max + m) += a / std::sqrt(2.0);
          amp(l, m_max - m) += sign * a / std::sqrt(2.0);
        } else {
          amp(l, m_max + m) += a;
        }
      }
    }
    if (!any) continue;
    // g_m(theta) = sum_l c_lm Ybar_l^|m|(theta), with Y_l,-m = (-1)^m conj(Y_lm).
    for (int i = 0; i < opt.n_theta; ++i)
      for (int m = -m_max; m <= m_max; ++m) {
        const int am = std::abs(m);
        const double sign = (m < 0 && (am % 2)) ? -1.0 : 1.0;
        cplx sum = 0.0;
        for (int l = am; l <= l_max; ++l) sum += amp(l, m_max + m) * legendre[i](l, am);
        g(i, m_max + m) = sign * sum;
      }
    for (int j = 0; j < opt.n_phi; ++j) {
      Eigen::VectorXcd em(nm);
      for (int m = -m_max; m <= m_max; ++m) em(m_max + m) = std::polar(1.0, m * out.phi[j]);
      const Eigen::VectorXcd f = g * em;
      out.dp.col(j) += width * f.cwiseAbs2();
    }
  }
  return out;
}

double band_power(const std::vector<double>& times, const std::vector<double>& values, double w_lo,
                  double w_hi) {
  const std::size_t n = values.size();
  if (n < 4 || times.size() != n) throw ConfigError("band_power: need at least 4 samples");
  const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double line = values.front() + (values.back() - values.front()) * i / (n - 1.0);
    const double hann = 0.5 - 0.5 * std::cos(2.0 * units::kPi * i / (n - 1.0));
    x[i] = (values[i] - line) * hann;
  }
  double power = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double w = 2.0 * units::kPi * k / (n * dt);
    if (w < w_lo || w > w_hi) continue;
    cplx sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      sum += x[i] * std::polar(1.0, -2.0 * units::kPi * double(k) * double(i) / double(n));
    power += std::norm(sum);
  }
  return power;
}

}  // namespace ndt
