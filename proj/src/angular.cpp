// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#include "ndtdse/angular.hpp"

#include <cmath>
#include <numbers>

#include "ndtdse/errors.hpp"

namespace ndt {

namespace {

bool is_integer(double x) { return std::abs(x - std::round(x)) < 1e-9; }

}  // namespace

std::vector<double> wigner3j_range(double j2, double j3, double m2, double m3, double& j1_min) {
  const double m1 = -m2 - m3;
  j1_min = std::max(std::abs(j2 - j3), std::abs(m1));
  const double j1_max = j2 + j3;
  if (std::abs(m2) > j2 + 1e-9 || std::abs(m3) > j3 + 1e-9 || j1_max < j1_min - 1e-9) return {};
  if (!is_integer(j2 + m2) || !is_integer(j3 + m3)) return {};
  const int count = static_cast<int>(std::lround(j1_max - j1_min)) + 1;

  const auto E = [&](double j) {
    const double a = j * j - (j2 - j3) * (j2 - j3);
    const double b = (j2 + j3 + 1.0) * (j2 + j3 + 1.0) - j * j;
    const double c = j * j - m1 * m1;
    return std::sqrt(std::max(0.0, a * b * c));
  };
  const auto F = [&](double j) {
    return -(2.0 * j + 1.0) *
           (j2 * (j2 + 1.0) * m1 - j3 * (j3 + 1.0) * m1 - j * (j + 1.0) * (m3 - m2));
  };
  const auto jv = [&](int i) { return j1_min + i; };

  std::vector<double> f(count, 0.0);
  if (count == 1) {
    f[0] = 1.0;
  } else {
    // Index of the match point: middle of the classically allowed stretch,
    // where the recursion has oscillatory characteristic roots.
    int lo = -1, hi = -1;
    for (int i = 1; i + 1 < count; ++i) {
      const double j = jv(i);
      const double disc = F(j) * F(j) - 4.0 * j * (j + 1.0) * E(j) * E(j + 1.0);
      if (disc < 0.0) {
        if (lo < 0) lo = i;
        hi = i;
      }
    }
    int match = lo < 0 ? count / 2 : (lo + hi) / 2;
    const bool forward_possible = j1_min > 0.5;
    if (!forward_possible) match = 0;
    match = std::clamp(match, 0, count - 1);

    // backward from the top
    std::vector<double> g(count, 0.0);
    g[count - 1] = 1.0;
    for (int i = count - 1; i > 0 && i > match - 1; --i) {
      const double j = jv(i);
      const double up = (i + 1 < count) ? j * E(j + 1.0) * g[i + 1] : 0.0;
      g[i - 1] = -(F(j) * g[i] + up) / ((j + 1.0) * E(j));
      // keep magnitudes bounded
      if (std::abs(g[i - 1]) > 1e150)
        for (int k = i - 1; k < count; ++k) g[k] *= 1e-150;
    }
    if (!forward_possible || match == 0) {
      f = g;
    } else {
      f[0] = 1.0;
      for (int i = 0; i < count - 1 && i < match + 1; ++i) {
        const double j = jv(i);
        const double down = (i > 0) ? (j + 1.0) * E(j) * f[i - 1] : 0.0;
        f[i + 1] = -(F(j) * f[i] + down) / (j * E(j + 1.0));
        if (std::abs(f[i + 1]) > 1e150)
          for (int k = 0; k <= i + 1; ++k) f[k] *= 1e-150;
      }
      double num = 0.0, den = 0.0;
      for (int i = std::max(0, match - 1); i <= std::min(count - 1, match + 1); ++i) {
        num += f[i] * g[i];
        den += g[i] * g[i];
      }
      const double scale = num / den;
      for (int i = match; i < count; ++i) f[i] = scale * g[i];
    }
  }
  double norm = 0.0;
  for (int i = 0; i < count; ++i) norm += (2.0 * jv(i) + 1.0) * f[i] * f[i];
  norm = 1.0 / std::sqrt(norm);
  const long phase = std::lround(j2 - j3 + m2 + m3);
  const double sign = (phase % 2 == 0) ? 1.0 : -1.0;
  if (f[count - 1] * sign < 0.0) norm = -norm;
  for (double& v : f) v *= norm;
  return f;
}

double wigner3j(double j1, double j2, double j3, double m1, double m2, double m3) {
  if (std::abs(m1 + m2 + m3) > 1e-9) return 0.0;
  if (std::abs(m1) > j1 + 1e-9) return 0.0;
  if (!is_integer(j1 + m1) || !is_integer(j1 + j2 + j3)) return 0.0;
  double j1_min = 0.0;
  const auto seq = wigner3j_range(j2, j3, m2, m3, j1_min);
  if (seq.empty()) return 0.0;
  const double offset = j1 - j1_min;
  if (offset < -1e-9 || !is_integer(offset)) return 0.0;
  const long i = std::lround(offset);
  return i < static_cast<long>(seq.size()) ? seq[i] : 0.0;
}

double gaunt_l1(int lp, int mp, int q, int l, int m) {
  if (mp != q + m) return 0.0;
  const double pre = std::sqrt(3.0 * (2 * lp + 1) * (2 * l + 1) / (4.0 * std::numbers::pi));
  const double sign = (mp % 2 == 0) ? 1.0 : -1.0;
  return sign * pre * wigner3j(lp, 1, l, 0, 0, 0) * wigner3j(lp, 1, l, -mp, q, m);
}

std::string_view to_string(ChannelSymmetry symmetry) {
  return symmetry == ChannelSymmetry::Full ? "full" : "reflection_even";
}

std::optional<ChannelSymmetry> parse_channel_symmetry(std::string_view name) {
  if (name == "full") return ChannelSymmetry::Full;
  if (name == "reflection_even") return ChannelSymmetry::ReflectionEven;
  return std::nullopt;
}

ChannelBasis build_channels(int l_max, int m_max, ChannelSymmetry symmetry) {
  if (l_max < 0 || m_max < 0 || m_max > l_max)
    throw ConfigError("channels: need 0 <= m_max <= l_max");
  ChannelBasis b;
  b.l_max_ = l_max;
  b.m_max_ = m_max;
  b.symmetry_ = symmetry;
  b.first_.reserve(l_max + 2);
  for (int l = 0; l <= l_max; ++l) {
    b.first_.push_back(static_cast<int>(b.channels_.size()));
    const int mm = std::min(l, m_max);
    const int m_lo = symmetry == ChannelSymmetry::Full ? -mm : 0;
    for (int m = m_lo; m <= mm; ++m) b.channels_.push_back({l, m});
  }
  b.first_.push_back(static_cast<int>(b.channels_.size()));
  return b;
}

int ChannelBasis::index(int l, int m) const {
  if (l < 0 || l > l_max_) return -1;
  const int mm = std::min(l, m_max_);
  if (m > mm || m < -mm) return -1;
  if (symmetry_ == ChannelSymmetry::Full) return first_[l] + (m + mm);
  return m < 0 ? -1 : first_[l] + m;
}

namespace {

// <Y_l'm'| e.r_hat |Y_lm> in complex harmonics. axis 2: z, axis 0: x.
double direction_cosine_complex(int axis, int lp, int mp, int l, int m) {
  if (axis == 2) return std::sqrt(4.0 * std::numbers::pi / 3.0) * gaunt_l1(lp, mp, 0, l, m);
  return std::sqrt(2.0 * std::numbers::pi / 3.0) *
         (gaunt_l1(lp, mp, -1, l, m) - gaunt_l1(lp, mp, 1, l, m));
}

// Components of a ReflectionEven basis function on complex Y_l,sigma.
struct Component {
  int m;
  double weight;
};

std::vector<Component> components(const ChannelBasis& basis, int m) {
  if (basis.symmetry() == ChannelSymmetry::Full || m == 0) return {{m, 1.0}};
  const double w = 1.0 / std::sqrt(2.0);
  return {{m, w}, {-m, (m % 2 == 0) ? w : -w}};
}

}  // namespace

double direction_cosine(const ChannelBasis& channels, int axis, int row, int col) {
  const Channel& a = channels[row];
  const Channel& b = channels[col];
  if (std::abs(a.l - b.l) != 1) return 0.0;
  double sum = 0.0;
  for (const auto& ca : components(channels, a.m))
    for (const auto& cb : components(channels, b.m))
      sum += ca.weight * cb.weight * direction_cosine_complex(axis, a.l, ca.m, b.l, cb.m);
  return sum;
}

CouplingTables coupling_tables(const ChannelBasis& channels) {
  CouplingTables t;
  auto& z = t.entries[static_cast<int>(CouplingOperator::Z)];
  auto& x = t.entries[static_cast<int>(CouplingOperator::X)];
  auto& pz = t.entries[static_cast<int>(CouplingOperator::Pz)];
  auto& px = t.entries[static_cast<int>(CouplingOperator::Px)];
  const double eps = 1e-15;
  for (int col = 0; col < channels.size(); ++col) {
    const int l = channels[col].l;
    for (int lp : {l - 1, l + 1}) {
      if (lp < 0 || lp > channels.l_max()) continue;
      // Radial companion of d/dr in the gradient formula for reduced functions.
      const double inv_r_factor = lp == l + 1 ? -(l + 1.0) : static_cast<double>(l);
      for (int row = channels.first_of_l(lp); row < channels.first_of_l(lp) + channels.count_of_l(lp);
           ++row) {
        const double gz = direction_cosine(channels, 2, row, col);
        const double gx = direction_cosine(channels, 0, row, col);
        if (std::abs(gz) > eps) {
          z.push_back({row, col, RadialKind::R, gz});
          pz.push_back({row, col, RadialKind::Ddr, gz});
          pz.push_back({row, col, RadialKind::InvR, inv_r_factor * gz});
        }
        if (std::abs(gx) > eps) {
          x.push_back({row, col, RadialKind::R, gx});
          px.push_back({row, col, RadialKind::Ddr, gx});
          px.push_back({row, col, RadialKind::InvR, inv_r_factor * gx});
        }
      }
    }
  }
  return t;
}

}  // namespace ndt
