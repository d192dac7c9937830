// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include "ndtdse/hamiltonian.hpp"

#include <cmath>

#include "ndtdse/constants.hpp"
#include "ndtdse/errors.hpp"

namespace ndt {

std::string_view to_string(InteractionModel model) {
  switch (model) {
    case InteractionModel::Dipole: return "dipole";
    case InteractionModel::FirstOrder: return "first_order";
    case InteractionModel::EnvelopeVG: return "envelope_vg";
    case InteractionModel::PGFull: return "pg_full";
    case InteractionModel::PGEnvelope: return "pg_envelope";
  }
  return "?";
}

std::optional<InteractionModel> parse_interaction_model(std::string_view name) {
  for (auto m : kAllModels)
    if (to_string(m) == name) return m;
  return std::nullopt;
}

int default_breakpoints(double r_max, KnotLaw law, double r_match) {
  constexpr double kSpacing = 0.6;
  const double span = law == KnotLaw::SqrtRamp && r_max > r_match ? r_max + r_match : r_max;
  return static_cast<int>(std::ceil(span / kSpacing)) + 1;
}

Eigen::Index Discretization::state_index(int l, int m, int n) const {
  const int c = channels.index(l, m);
  if (c < 0 || n < 0 || n >= n_states(l)) return -1;
  return offsets[c] + n;
}

std::shared_ptr<const Discretization> build_discretization(const BasisSettings& s,
                                                           const std::filesystem::path& cache_dir) {
  auto disc = std::make_shared<Discretization>();
  disc->settings = s;
  if (disc->settings.n_breakpoints <= 0)
    disc->settings.n_breakpoints = default_breakpoints(s.r_max, s.knot_law, s.r_match);
  if (!(s.e_cut > 0.0)) throw ConfigError("basis: e_cut must be > 0");
  disc->radial =
      build_basis(s.r_max, s.order, disc->settings.n_breakpoints, s.knot_law, s.r_match);
  disc->ops = assemble_operators(disc->radial);
  disc->channels = build_channels(s.l_max, s.m_max, s.symmetry);
  disc->spectra.reserve(s.l_max + 1);
  for (int l = 0; l <= s.l_max; ++l) {
    disc->spectra.push_back(
        solve_channel_cached(disc->radial, disc->ops, l, s.charge, cache_dir).truncated(s.e_cut));
    if (disc->spectra.back().size() == 0)
      throw NumericalError("no field-free states below e_cut for l=" + std::to_string(l));
  }
  disc->couplings = coupling_tables(disc->channels);
  disc->offsets.resize(disc->channels.size() + 1);
  Eigen::Index off = 0;
  for (int c = 0; c < disc->channels.size(); ++c) {
    disc->offsets[c] = off;
    off += disc->n_states(disc->channels[c].l);
  }
  disc->offsets.back() = off;
  return disc;
}

WavefunctionState ground_state(const Discretization& disc, double t) {
  WavefunctionState psi;
  psi.coeffs = Eigen::VectorXcd::Zero(disc.dim());
  psi.coeffs(disc.state_index(0, 0, 0)) = 1.0;
  psi.t = t;
  return psi;
}

InteractionScalars interaction_scalars(InteractionModel model, const Pulse& pulse, double t) {
  const CouplingScalars s = coupling_scalars(pulse, t);
  constexpr double c = units::kSpeedOfLight;
  const double amp2 = (pulse.e0 / pulse.omega) * (pulse.e0 / pulse.omega);
  InteractionScalars out;
  out.pz = s.a;
  switch (model) {
    case InteractionModel::Dipole: break;
    case InteractionModel::FirstOrder: out.x = -s.a_aprime / c; break;
    case InteractionModel::EnvelopeVG: out.x = -amp2 * s.f_fprime / (2.0 * c); break;
    case InteractionModel::PGFull: out.px = amp2 * (s.f2 - s.f2_cos2) / (4.0 * c); break;
    case InteractionModel::PGEnvelope: out.px = amp2 * s.f2 / (4.0 * c); break;
  }
  return out;
}

namespace {

constexpr int kOpX = 0, kOpPz = 1, kOpPx = 2;

bool model_uses(InteractionModel model, int op) {
  switch (op) {
    case kOpPz: return true;
    case kOpX:
      return model == InteractionModel::FirstOrder || model == InteractionModel::EnvelopeVG;
    case kOpPx:
      return model == InteractionModel::PGFull || model == InteractionModel::PGEnvelope;
  }
  return false;
}

}  // namespace

Hamiltonian::Hamiltonian(InteractionModel model, Pulse pulse,
                         std::shared_ptr<const Discretization> disc)
    : model_(model), pulse_(pulse), disc_(std::move(disc)) {
  if (!disc_) throw ConfigError("hamiltonian: missing discretization");
  pulse_.validate();
  const ChannelBasis& ch = disc_->channels;
  if (static_cast<int>(disc_->spectra.size()) != ch.l_max() + 1)
    throw ConfigError("hamiltonian: channel and radial bases disagree on l_max");
  for (const auto& s : disc_->spectra)
    if (s.basis_id != disc_->radial.id())
      throw ConfigError("hamiltonian: spectrum built on a different radial basis");

  const std::array<CouplingOperator, 3> table_of = {CouplingOperator::X, CouplingOperator::Pz,
                                                    CouplingOperator::Px};
  // index pairs (l_row, l_col) -> block
  std::vector<int> lookup(static_cast<std::size_t>(ch.l_max() + 1) * (ch.l_max() + 1), -1);
  for (int op = 0; op < 3; ++op) {
    if (!model_uses(model_, op)) continue;
    for (const CouplingEntry& e : disc_->couplings[table_of[op]]) {
      const int lr = ch[e.row].l, lc = ch[e.col].l;
      int& slot = lookup[static_cast<std::size_t>(lr) * (ch.l_max() + 1) + lc];
      if (slot < 0) {
        slot = static_cast<int>(blocks_.size());
        PairBlock b;
        b.l_row = lr;
        b.l_col = lc;
        for (auto& per_op : b.w)
          for (auto& m : per_op) m = Eigen::MatrixXd::Zero(ch.count_of_l(lr), ch.count_of_l(lc));
        blocks_.push_back(std::move(b));
      }
      PairBlock& b = blocks_[slot];
      const int k = static_cast<int>(e.kind);
      b.w[op][k](e.row - ch.first_of_l(lr), e.col - ch.first_of_l(lc)) += e.coeff;
      b.used[op][k] = true;
    }
  }
}

int Hamiltonian::coupling_block_count() const {
  int n = 0;
  for (const PairBlock& b : blocks_) n += b.l_row > b.l_col;
  return n;
}

void Hamiltonian::apply(const Eigen::VectorXcd& psi, double t, Eigen::VectorXcd& out) const {
  const Discretization& d = *disc_;
  const ChannelBasis& ch = d.channels;
  const int n = d.radial.n_splines();
  const int l_max = ch.l_max();
  out.resize(psi.size());

  const InteractionScalars s = interaction_scalars(model_, pulse_, t);
  const std::array<std::complex<double>, 3> scale = {std::complex<double>(s.x, 0.0),
                                                     std::complex<double>(0.0, -s.pz),
                                                     std::complex<double>(0.0, -s.px)};
  const std::array<const BandMatrix*, 3> radial_op = {&d.ops.R, &d.ops.Ddr, &d.ops.InvR};

  using Mat = Eigen::MatrixXcd;
  using ConstMap = Eigen::Map<const Mat>;
  using MapOut = Eigen::Map<Mat>;

  // Field-free part: diagonal in the working basis.
  for (int l = 0; l <= l_max; ++l) {
    const int ns = d.n_states(l);
    for (int c = ch.first_of_l(l); c < ch.first_of_l(l) + ch.count_of_l(l); ++c)
      out.segment(d.offsets[c], ns) =
          d.spectra[l].energies.cast<std::complex<double>>().cwiseProduct(
              psi.segment(d.offsets[c], ns));
  }
  if (blocks_.empty() || (s.x == 0.0 && s.pz == 0.0 && s.px == 0.0)) return;

  // Everything below is real arithmetic on [Re | Im] column blocks. The R kind
  // carries only the real x scalar; Ddr and InvR carry only the momentum
  // scalars, which enter multiplied by -i.
  using RMat = Eigen::MatrixXd;
  std::vector<RMat> spline(l_max + 1), accum(l_max + 1);
  RMat split;
  for (int l = 0; l <= l_max; ++l) {
    const int cnt = ch.count_of_l(l);
    const int ns = d.n_states(l);
    ConstMap c(psi.data() + d.offsets[ch.first_of_l(l)], ns, cnt);
    split.resize(ns, 2 * cnt);
    split.leftCols(cnt) = c.real();
    split.rightCols(cnt) = c.imag();
    spline[l].noalias() = d.spectra[l].vectors * split;
    accum[l] = RMat::Zero(n, 2 * cnt);
  }
  RMat weight, tmp, rotated;
  for (const PairBlock& b : blocks_) {
    const int cr = ch.count_of_l(b.l_row), cc = ch.count_of_l(b.l_col);
    for (int k = 0; k < 3; ++k) {
      weight.setZero(cr, cc);
      bool any = false;
      const bool imaginary = k != static_cast<int>(RadialKind::R);
      for (int op = 0; op < 3; ++op) {
        if (!b.used[op][k]) continue;
        const double f = imaginary ? -scale[op].imag() : scale[op].real();
        if (f == 0.0) continue;
        weight += f * b.w[op][k];
        any = true;
      }
      if (!any) continue;
      const RMat& src = spline[b.l_col];
      tmp.resize(n, 2 * cr);
      tmp.leftCols(cr).noalias() = src.leftCols(cc) * weight.transpose();
      tmp.rightCols(cr).noalias() = src.rightCols(cc) * weight.transpose();
      if (imaginary) {
        // -i (a + i b) = b - i a
        rotated.resize(n, 2 * cr);
        rotated.leftCols(cr) = tmp.rightCols(cr);
        rotated.rightCols(cr) = -tmp.leftCols(cr);
        radial_op[k]->apply_add(rotated, accum[b.l_row], 1.0);
      } else {
        radial_op[k]->apply_add(tmp, accum[b.l_row], 1.0);
      }
    }
  }
  for (int l = 0; l <= l_max; ++l) {
    const int cnt = ch.count_of_l(l);
    MapOut o(out.data() + d.offsets[ch.first_of_l(l)], d.n_states(l), cnt);
    split.noalias() = d.spectra[l].vectors.transpose() * accum[l];
    o.real() += split.leftCols(cnt);
    o.imag() += split.rightCols(cnt);
  }
}

GaugeBoundaryReport gauge_boundary_check(const Pulse& pulse, double tolerance) {
  GaugeBoundaryReport r;
  r.tolerance = tolerance;
  r.a_start = std::abs(vector_potential(pulse, pulse.t_start));
  r.f_start = std::abs(envelope(pulse, pulse.t_start));
  r.a_end = std::abs(vector_potential(pulse, pulse.t_end));
  r.f_end = std::abs(envelope(pulse, pulse.t_end));
  r.u_is_identity = r.a_start < tolerance && r.f_start < tolerance && r.a_end < tolerance &&
                    r.f_end < tolerance;
  return r;
}

}  // namespace ndt
