// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace ndt {

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3). Arguments may be half-integers.
/// Evaluated by the Schulten-Gordon three-term recursion in j1, run from
/// both ends and matched inside the classically allowed region. Returns 0
/// when a selection rule fails.
double wigner3j(double j1, double j2, double j3, double m1, double m2, double m3);

/// All nonzero-range values of (j1 j2 j3; -m2-m3 m2 m3) for
/// j1 = j1_min, j1_min + 1, ..., j2 + j3.
std::vector<double> wigner3j_range(double j2, double j3, double m2, double m3, double& j1_min);

/// <Y_l'm'| Y_1q |Y_lm>, complex harmonics with the Condon-Shortley phase.
double gaunt_l1(int lp, int mp, int q, int l, int m);

enum class ChannelSymmetry { Full, ReflectionEven };

std::string_view to_string(ChannelSymmetry symmetry);
std::optional<ChannelSymmetry> parse_channel_symmetry(std::string_view name);

struct Channel {
  int l = 0;
  /// Azimuthal number. In the ReflectionEven basis m >= 0 labels the
  /// combination (Y_lm + (-1)^m Y_l,-m)/sqrt(2), or Y_l0 for m = 0.
  int m = 0;
  bool operator==(const Channel&) const = default;
};

/// Ordered (l, m) channels: l-major, then m ascending. Channels of equal l
/// are contiguous.
class ChannelBasis {
 public:
  int l_max() const { return l_max_; }
  int m_max() const { return m_max_; }
  ChannelSymmetry symmetry() const { return symmetry_; }
  int size() const { return static_cast<int>(channels_.size()); }
  const Channel& operator[](int i) const { return channels_[i]; }
  const std::vector<Channel>& channels() const { return channels_; }

  /// Channel ordinal, or -1 when (l, m) is not part of the basis.
  int index(int l, int m) const;
  int first_of_l(int l) const { return first_[l]; }
  int count_of_l(int l) const { return first_[l + 1] - first_[l]; }

  friend ChannelBasis build_channels(int, int, ChannelSymmetry);

 private:
  int l_max_ = 0;
  int m_max_ = 0;
  ChannelSymmetry symmetry_ = ChannelSymmetry::Full;
  std::vector<Channel> channels_;
  std::vector<int> first_;
};

ChannelBasis build_channels(int l_max, int m_max, ChannelSymmetry symmetry = ChannelSymmetry::Full);

enum class CouplingOperator { Z = 0, X = 1, Pz = 2, Px = 3 };
enum class RadialKind { R = 0, Ddr = 1, InvR = 2 };

/// One term <row| O |col> = coeff * <u_row| K |u_col>, K the radial kind.
/// Momentum tables hold the real matrix of d/dx_i; p = -i * (table).
struct CouplingEntry {
  int row = 0;
  int col = 0;
  RadialKind kind = RadialKind::R;
  double coeff = 0.0;
};

struct CouplingTables {
  std::array<std::vector<CouplingEntry>, 4> entries;
  const std::vector<CouplingEntry>& operator[](CouplingOperator op) const {
    return entries[static_cast<int>(op)];
  }
};

/// Angular factor <row| e.r_hat |col> of the unit vector along z (axis 2) or x (axis 0),
/// in the channel basis convention.
double direction_cosine(const ChannelBasis& channels, int axis, int row, int col);

CouplingTables coupling_tables(const ChannelBasis& channels);

}  // namespace ndt
