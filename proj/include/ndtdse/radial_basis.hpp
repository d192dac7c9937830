// Copyright 2026 The nondipole-tdse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ndtdse/band_matrix.hpp"

namespace ndt {

enum class KnotLaw { Linear, SqrtRamp };

std::string_view to_string(KnotLaw law);
std::optional<KnotLaw> parse_knot_law(std::string_view name);

/// B-spline basis for the reduced radial function u(r) = r R(r). The first
/// and last splines are dropped so that every retained function vanishes at
/// r = 0 and r = r_max.
class RadialBasis {
 public:
  double r_max() const { return r_max_; }
  int order() const { return order_; }
  int n_splines() const { return n_splines_; }
  KnotLaw knot_law() const { return law_; }
  double r_match() const { return r_match_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  /// Full knot vector including the order-fold end knots.
  const std::vector<double>& knots() const { return knots_; }
  /// Fingerprint of the knot sequence; spectra built on different bases
  /// carry different ids.
  std::uint64_t id() const { return id_; }

  /// Gauss-Legendre points per knot interval used for matrix assembly.
  int quadrature_order() const { return n_quad_; }

  /// Value of retained spline i at r (zero outside its support).
  double value(int i, double r) const;

  /// Values of all retained splines at r, as (first retained index, values).
  /// At most `order` entries are nonzero.
  std::pair<int, std::vector<double>> nonzero(double r) const;

  friend RadialBasis build_basis(double, int, int, KnotLaw, double);

 private:
  double r_max_ = 0.0;
  int order_ = 0;
  int n_splines_ = 0;
  KnotLaw law_ = KnotLaw::Linear;
  double r_match_ = 0.0;
  int n_quad_ = 0;
  std::uint64_t id_ = 0;
  std::vector<double> breakpoints_;
  std::vector<double> knots_;
};

/// Breakpoint law: Linear is uniform on [0, r_max]; SqrtRamp uses
/// r = r_match (s/s_m)^2 below r_match and continues linearly with matching
/// slope beyond it. Throws ConfigError for degenerate parameters.
RadialBasis build_basis(double r_max, int order, int n_breakpoints, KnotLaw law,
                        double r_match = 20.0);

/// Banded matrices over the retained splines, bandwidth order - 1.
struct RadialOperators {
  BandMatrix S;      // <B_i|B_j>
  BandMatrix D2;     // <B_i|d^2/dr^2|B_j> = -<B_i'|B_j'>
  BandMatrix InvR;   // <B_i|1/r|B_j>
  BandMatrix InvR2;  // <B_i|1/r^2|B_j>
  BandMatrix R;      // <B_i|r|B_j>
  BandMatrix Ddr;    // <B_i|d/dr|B_j>, antisymmetric
};

RadialOperators assemble_operators(const RadialBasis& basis);

/// <B_i| g(r) |B_j> by the same quadrature as assemble_operators.
BandMatrix assemble_weighted(const RadialBasis& basis, const std::function<double(double)>& g);

/// Least-squares spline coefficients of g: S c = <B|g>.
Eigen::VectorXd fit_function(const RadialBasis& basis, const RadialOperators& ops,
                             const std::function<double(double)>& g);

/// Field-free eigenpairs of one partial wave, H0(l) c = E S c, ascending,
/// S-orthonormal columns. Each eigenvector is signed so that its first
/// significant lobe near the origin is positive.
struct ChannelSpectrum {
  int l = 0;
  double charge = 1.0;
  std::uint64_t basis_id = 0;
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;  // n_splines x n_states

  int size() const { return static_cast<int>(energies.size()); }
  int n_bound() const;
  /// Copy restricted to energies <= e_cut.
  ChannelSpectrum truncated(double e_cut) const;
};

BandMatrix channel_hamiltonian(const RadialOperators& ops, int l, double charge);

ChannelSpectrum solve_channel(const RadialBasis& basis, const RadialOperators& ops, int l,
                              double charge = 1.0);

/// Dense tables <a|O|b> over the eigenstates of two spectra of one basis.
struct RadialTables {
  Eigen::MatrixXd r;
  Eigen::MatrixXd ddr;
  Eigen::MatrixXd inv_r;
};

RadialTables radial_matrix_elements(const ChannelSpectrum& a, const ChannelSpectrum& b,
                                    const RadialOperators& ops,
                                    std::optional<double> e_max = std::nullopt);

/// Dense V_a^T M V_b for an arbitrary banded operator.
Eigen::MatrixXd project_operator(const ChannelSpectrum& a, const ChannelSpectrum& b,
                                 const BandMatrix& m);

// Binary spectrum cache ("NDT1"): header then little-endian doubles,
// eigenvalues followed by the eigenvectors in column-major order.
struct SpectrumCacheKey {
  double r_max = 0.0;
  std::uint32_t order = 0;
  std::uint32_t knot_law = 0;
  std::uint32_t n_splines = 0;
  std::uint32_t l = 0;
  double charge = 1.0;
  double r_match = 0.0;

  static SpectrumCacheKey of(const RadialBasis& basis, int l, double charge);
  std::string file_name() const;
  bool operator==(const SpectrumCacheKey&) const = default;
};

void save_spectrum(const std::filesystem::path& path, const SpectrumCacheKey& key,
                   const ChannelSpectrum& spectrum);
/// Returns nullopt when the file is missing or its key differs.
std::optional<ChannelSpectrum> load_spectrum(const std::filesystem::path& path,
                                             const SpectrumCacheKey& key,
                                             std::uint64_t basis_id);

/// solve_channel backed by a cache directory (no caching when dir is empty).
ChannelSpectrum solve_channel_cached(const RadialBasis& basis, const RadialOperators& ops,
                                     int l, double charge,
                                     const std::filesystem::path& cache_dir);

}  // namespace ndt
