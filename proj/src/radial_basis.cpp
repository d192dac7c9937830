// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include "ndtdse/radial_basis.hpp"

#include <lapacke.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ndtdse/errors.hpp"
#include "ndtdse/quadrature.hpp"

namespace ndt {

namespace {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

// Nonzero B-splines of order k (degree k-1) and their first derivatives at x,
// for the knot span [t[span], t[span+1]). Entry a belongs to full spline
// index span - (k-1) + a.
void eval_span(const std::vector<double>& t, int k, int span, double x, double* val,
               double* der) {
  const int p = k - 1;
  std::vector<double> left(k), right(k);
  // ndu[j] holds degree-j values; keep the degree p-1 row for derivatives.
  std::vector<double> n(k, 0.0), prev(k, 0.0);
  n[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    if (j == p) std::copy(n.begin(), n.begin() + p, prev.begin());
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  if (p == 0) prev[0] = 0.0;
  for (int a = 0; a <= p; ++a) {
    val[a] = n[a];
    const int i = span - p + a;  // full index
    double d = 0.0;
    // degree p-1 spline i lives at prev[a-1], spline i+1 at prev[a]
    if (a >= 1) {
      const double den = t[i + p] - t[i];
      if (den > 0.0) d += p * prev[a - 1] / den;
    }
    if (a <= p - 1) {
      const double den = t[i + p + 1] - t[i + 1];
      if (den > 0.0) d -= p * prev[a] / den;
    }
    der[a] = d;
  }
}

int find_span(const std::vector<double>& t, int k, int n_full, double x) {
  if (x >= t[n_full]) return n_full - 1;
  auto it = std::upper_bound(t.begin() + k - 1, t.begin() + n_full + 1, x);
  return static_cast<int>(it - t.begin()) - 1;
}

struct Integrator {
  // Accumulates <B_i| w(r) |B_j> style integrals over the retained splines.
  template <typename F>
  static void run(const RadialBasis& basis, F&& per_node) {
    const auto& bp = basis.breakpoints();
    const int k = basis.order();
    const auto& t = basis.knots();
    std::vector<double> val(k), der(k);
    const QuadratureRule ref = gauss_legendre(basis.quadrature_order());
    for (std::size_t iv = 0; iv + 1 < bp.size(); ++iv) {
      const double a = bp[iv], b = bp[iv + 1];
      const int span = static_cast<int>(iv) + k - 1;
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (std::size_t q = 0; q < ref.nodes.size(); ++q) {
        const double r = mid + half * ref.nodes[q];
        const double w = half * ref.weights[q];
        eval_span(t, k, span, r, val.data(), der.data());
        // full index span-k+1+a, retained index = full - 1
        per_node(span - k, r, w, val.data(), der.data());
      }
    }
  }
};

}  // namespace

std::string_view to_string(KnotLaw law) {
  return law == KnotLaw::Linear ? "linear" : "sqrt_ramp";
}

std::optional<KnotLaw> parse_knot_law(std::string_view name) {
  if (name == "linear") return KnotLaw::Linear;
  if (name == "sqrt_ramp") return KnotLaw::SqrtRamp;
  return std::nullopt;
}

RadialBasis build_basis(double r_max, int order, int n_breakpoints, KnotLaw law, double r_match) {
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw ConfigError("basis: r_max must be > 0");
  if (order < 4) throw ConfigError("basis: spline order must be >= 4");
  if (n_breakpoints < order + 2)
    throw ConfigError("basis: need at least order + 2 breakpoints");
  if (law == KnotLaw::SqrtRamp && !(r_match > 0.0))
    throw ConfigError("basis: r_match must be > 0 for sqrt_ramp knots");

  RadialBasis b;
  b.r_max_ = r_max;
  b.order_ = order;
  b.law_ = law;
  b.r_match_ = law == KnotLaw::SqrtRamp ? r_match : 0.0;
  b.n_quad_ = 2 * order + 8;

  const int intervals = n_breakpoints - 1;
  b.breakpoints_.resize(n_breakpoints);
  for (int i = 0; i <= intervals; ++i) {
    const double s = static_cast<double>(i);
    double r = 0.0;
    if (law == KnotLaw::Linear) {
      r = r_max * s / intervals;
    } else if (r_max <= r_match) {
      r = r_max * (s / intervals) * (s / intervals);
    } else {
      const double s_m = 2.0 * r_match * intervals / (r_max + r_match);
      r = s <= s_m ? r_match * (s / s_m) * (s / s_m)
                   : r_match + 2.0 * r_match / s_m * (s - s_m);
    }
    b.breakpoints_[i] = r;
  }
  b.breakpoints_.front() = 0.0;
  b.breakpoints_.back() = r_max;
  for (int i = 1; i <= intervals; ++i)
    if (!(b.breakpoints_[i] > b.breakpoints_[i - 1]))
      throw ConfigError("basis: breakpoints are not strictly increasing");

  b.knots_.assign(order - 1, 0.0);
  b.knots_.insert(b.knots_.end(), b.breakpoints_.begin(), b.breakpoints_.end());
  b.knots_.insert(b.knots_.end(), order - 1, r_max);
  b.n_splines_ = n_breakpoints + order - 4;
  b.id_ = fnv1a(b.knots_.data(), b.knots_.size() * sizeof(double),
                fnv1a(&order, sizeof(order)));
  return b;
}

std::pair<int, std::vector<double>> RadialBasis::nonzero(double r) const {
  const int k = order_;
  const int n_full = n_splines_ + 2;
  if (r < 0.0 || r > r_max_) return {0, {}};
  const int span = find_span(knots_, k, n_full, r);
  std::vector<double> val(k), der(k);
  eval_span(knots_, k, span, r, val.data(), der.data());
  int first = span - k;  // retained index of entry 0
  std::vector<double> out;
  int start = -1;
  for (int a = 0; a < k; ++a) {
    const int idx = first + a;
    if (idx < 0 || idx >= n_splines_) continue;
    if (start < 0) start = idx;
    out.push_back(val[a]);
  }
  return {std::max(start, 0), out};
}

double RadialBasis::value(int i, double r) const {
  auto [first, vals] = nonzero(r);
  const int a = i - first;
  return (a >= 0 && a < static_cast<int>(vals.size())) ? vals[a] : 0.0;
}

RadialOperators assemble_operators(const RadialBasis& basis) {
  const int n = basis.n_splines();
  const int bw = basis.order() - 1;
  const int k = basis.order();
  RadialOperators ops{BandMatrix(n, bw), BandMatrix(n, bw), BandMatrix(n, bw),
                      BandMatrix(n, bw), BandMatrix(n, bw), BandMatrix(n, bw)};
  Integrator::run(basis, [&](int first, double r, double w, const double* v, const double* d) {
    for (int a = 0; a < k; ++a) {
      const int i = first + a;
      if (i < 0 || i >= n) continue;
      for (int c = 0; c < k; ++c) {
        const int j = first + c;
        if (j < 0 || j >= n) continue;
        const double vv = w * v[a] * v[c];
        ops.S.at(i, j) += vv;
        ops.D2.at(i, j) -= w * d[a] * d[c];
        ops.InvR.at(i, j) += vv / r;
        ops.InvR2.at(i, j) += vv / (r * r);
        ops.R.at(i, j) += vv * r;
        ops.Ddr.at(i, j) += w * v[a] * d[c];
      }
    }
  });
  // Remove quadrature round-off from the antisymmetric part.
  ops.Ddr = ops.Ddr.axpy(-1.0, ops.Ddr.transpose());
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - bw); j <= std::min(n - 1, i + bw); ++j) ops.Ddr.at(i, j) *= 0.5;
  return ops;
}

BandMatrix assemble_weighted(const RadialBasis& basis, const std::function<double(double)>& g) {
  const int n = basis.n_splines();
  const int k = basis.order();
  BandMatrix m(n, k - 1);
  Integrator::run(basis, [&](int first, double r, double w, const double* v, const double*) {
    const double gw = w * g(r);
    for (int a = 0; a < k; ++a) {
      const int i = first + a;
      if (i < 0 || i >= n) continue;
      for (int c = 0; c < k; ++c) {
        const int j = first + c;
        if (j < 0 || j >= n) continue;
        m.at(i, j) += gw * v[a] * v[c];
      }
    }
  });
  return m;
}

Eigen::VectorXd fit_function(const RadialBasis& basis, const RadialOperators& ops,
                             const std::function<double(double)>& g) {
  const int n = basis.n_splines();
  const int k = basis.order();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  Integrator::run(basis, [&](int first, double r, double w, const double* v, const double*) {
    const double gw = w * g(r);
    for (int a = 0; a < k; ++a) {
      const int i = first + a;
      if (i >= 0 && i < n) rhs(i) += gw * v[a];
    }
  });
  return ops.S.dense().llt().solve(rhs);
}

int ChannelSpectrum::n_bound() const {
  int count = 0;
  while (count < size() && energies(count) < 0.0) ++count;
  return count;
}

ChannelSpectrum ChannelSpectrum::truncated(double e_cut) const {
  int keep = 0;
  while (keep < size() && energies(keep) <= e_cut) ++keep;
  ChannelSpectrum out;
  out.l = l;
  out.charge = charge;
  out.basis_id = basis_id;
  out.energies = energies.head(keep);
  out.vectors = vectors.leftCols(keep);
  return out;
}

BandMatrix channel_hamiltonian(const RadialOperators& ops, int l, double charge) {
  return BandMatrix(ops.D2.size(), ops.D2.bandwidth())
      .axpy(-0.5, ops.D2)
      .axpy(0.5 * l * (l + 1.0), ops.InvR2)
      .axpy(-charge, ops.InvR);
}

ChannelSpectrum solve_channel(const RadialBasis& basis, const RadialOperators& ops, int l,
                              double charge) {
  if (l < 0) throw ConfigError("solve_channel: l must be >= 0");
  const int n = basis.n_splines();
  const int bw = basis.order() - 1;
  const BandMatrix h = channel_hamiltonian(ops, l, charge);
  const int ld = bw + 1;
  // LAPACK upper band storage, column-major: ab[(bw + i - j) + j*ld] = A(i, j).
  std::vector<double> ab(static_cast<std::size_t>(ld) * n), bb(static_cast<std::size_t>(ld) * n);
  for (int j = 0; j < n; ++j)
    for (int i = std::max(0, j - bw); i <= j; ++i) {
      ab[(bw + i - j) + static_cast<std::size_t>(j) * ld] = h(i, j);
      bb[(bw + i - j) + static_cast<std::size_t>(j) * ld] = ops.S(i, j);
    }
  ChannelSpectrum out;
  out.l = l;
  out.charge = charge;
  out.basis_id = basis.id();
  out.energies.resize(n);
  out.vectors.resize(n, n);
  const lapack_int info =
      LAPACKE_dsbgvd(LAPACK_COL_MAJOR, 'V', 'U', n, bw, bw, ab.data(), ld, bb.data(), ld,
                     out.energies.data(), out.vectors.data(), n);
  if (info != 0) {
    std::ostringstream msg;
    msg << "banded generalized eigensolver failed for channel l=" << l << " (info=" << info << ")";
    throw NumericalError(msg.str());
  }
  for (int c = 0; c < n; ++c) {
    auto col = out.vectors.col(c);
    const double peak = col.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      if (std::abs(col(i)) > 1e-3 * peak) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
  }
  return out;
}

Eigen::MatrixXd project_operator(const ChannelSpectrum& a, const ChannelSpectrum& b,
                                 const BandMatrix& m) {
  if (a.basis_id != b.basis_id) throw ConfigError("radial tables: spectra from different bases");
  Eigen::MatrixXd mb = Eigen::MatrixXd::Zero(b.vectors.rows(), b.vectors.cols());
  m.apply_add(b.vectors, mb, 1.0);
  return a.vectors.transpose() * mb;
}

RadialTables radial_matrix_elements(const ChannelSpectrum& a, const ChannelSpectrum& b,
                                    const RadialOperators& ops, std::optional<double> e_max) {
  if (a.basis_id != b.basis_id) throw ConfigError("radial tables: spectra from different bases");
  if (e_max) return radial_matrix_elements(a.truncated(*e_max), b.truncated(*e_max), ops);
  return {project_operator(a, b, ops.R), project_operator(a, b, ops.Ddr),
          project_operator(a, b, ops.InvR)};
}

// ---- cache ---------------------------------------------------------------

namespace {

constexpr char kCacheMagic[4] = {'N', 'D', 'T', '1'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    v = std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
void put_f64(std::ostream& os, double v) { put(os, std::bit_cast<std::uint64_t>(v)); }

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return to_little(v);
}
double get_f64(std::istream& is) { return std::bit_cast<double>(get<std::uint64_t>(is)); }

}  // namespace

SpectrumCacheKey SpectrumCacheKey::of(const RadialBasis& basis, int l, double charge) {
  SpectrumCacheKey key;
  key.r_max = basis.r_max();
  key.order = static_cast<std::uint32_t>(basis.order());
  key.knot_law = static_cast<std::uint32_t>(basis.knot_law());
  key.n_splines = static_cast<std::uint32_t>(basis.n_splines());
  key.l = static_cast<std::uint32_t>(l);
  key.charge = charge;
  key.r_match = basis.r_match();
  return key;
}

std::string SpectrumCacheKey::file_name() const {
  std::uint64_t h = fnv1a(&r_max, sizeof r_max);
  h = fnv1a(&r_match, sizeof r_match, h);
  h = fnv1a(&charge, sizeof charge, h);
  std::ostringstream name;
  name << "spectrum_k" << order << "_law" << knot_law << "_n" << n_splines << "_l" << l << "_"
       << std::hex << h << ".bin";
  return name.str();
}

void save_spectrum(const std::filesystem::path& path, const SpectrumCacheKey& key,
                   const ChannelSpectrum& spectrum) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open spectrum cache for writing: " + path.string());
  os.write(kCacheMagic, 4);
  put<std::uint32_t>(os, kCacheVersion);
  put_f64(os, key.r_max);
  put<std::uint32_t>(os, key.order);
  put<std::uint32_t>(os, key.knot_law);
  put<std::uint32_t>(os, key.n_splines);
  put<std::uint32_t>(os, key.l);
  put_f64(os, key.charge);
  put_f64(os, key.r_match);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(spectrum.size()));
  for (int i = 0; i < spectrum.size(); ++i) put_f64(os, spectrum.energies(i));
  const Eigen::Index total = spectrum.vectors.size();
  for (Eigen::Index i = 0; i < total; ++i) put_f64(os, spectrum.vectors.data()[i]);
  if (!os) throw IoError("failed writing spectrum cache: " + path.string());
}

std::optional<ChannelSpectrum> load_spectrum(const std::filesystem::path& path,
                                             const SpectrumCacheKey& key,
                                             std::uint64_t basis_id) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCacheMagic, 4) != 0) return std::nullopt;
  if (get<std::uint32_t>(is) != kCacheVersion) return std::nullopt;
  SpectrumCacheKey stored;
  stored.r_max = get_f64(is);
  stored.order = get<std::uint32_t>(is);
  stored.knot_law = get<std::uint32_t>(is);
  stored.n_splines = get<std::uint32_t>(is);
  stored.l = get<std::uint32_t>(is);
  stored.charge = get_f64(is);
  stored.r_match = get_f64(is);
  if (!is || !(stored == key)) return std::nullopt;
  const auto n_eig = get<std::uint64_t>(is);
  if (n_eig > key.n_splines) return std::nullopt;
  ChannelSpectrum s;
  s.l = static_cast<int>(key.l);
  s.charge = key.charge;
  s.basis_id = basis_id;
  s.energies.resize(static_cast<Eigen::Index>(n_eig));
  for (std::uint64_t i = 0; i < n_eig; ++i) s.energies(i) = get_f64(is);
  s.vectors.resize(key.n_splines, static_cast<Eigen::Index>(n_eig));
  for (Eigen::Index i = 0; i < s.vectors.size(); ++i) s.vectors.data()[i] = get_f64(is);
  if (!is) return std::nullopt;
  return s;
}

ChannelSpectrum solve_channel_cached(const RadialBasis& basis, const RadialOperators& ops,
                                     int l, double charge,
                                     const std::filesystem::path& cache_dir) {
  if (cache_dir.empty()) return solve_channel(basis, ops, l, charge);
  const auto key = SpectrumCacheKey::of(basis, l, charge);
  const auto path = cache_dir / key.file_name();
  if (auto hit = load_spectrum(path, key, basis.id())) return *std::move(hit);
  ChannelSpectrum s = solve_channel(basis, ops, l, charge);
  std::error_code ec;
  std::filesystem::create_directories(cache_dir, ec);
  // Write to a temporary name first so concurrent readers never see a partial file.
  const auto tmp = path.string() + ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&s));
  save_spectrum(tmp, key, s);
  std::filesystem::rename(tmp, path, ec);
  return s;
}

}  // namespace ndt
