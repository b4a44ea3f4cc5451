#pragma once

// Shared helpers for the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <random>

#include "greenprop/spectral_core.hpp"

namespace greenprop::testing {

/// Random Hermitian-symmetric coefficients on modes with max |j| <= band,
/// all other modes zero. `band` must stay below n/2 so the Nyquist plane is empty.
/// The grid RMS of the resulting field is about `scale`.
inline ComplexField random_band_coeffs(const WavenumberLattice& lattice, int band,
                                       std::mt19937_64& rng, double scale = 1.0) {
  const double modes = std::pow(2.0 * band + 1.0, 3);
  std::normal_distribution<double> normal(0.0, scale / std::sqrt(2.0 * modes));
  ComplexField c(lattice.size());
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const auto ijk = lattice.coords(m);
    bool inside = true;
    for (int a : ijk) inside = inside && std::abs(lattice.signed_index(a)) <= band;
    if (inside) c[m] = Complex(normal(rng), normal(rng));
  }
  // Symmetrize: c(-xi) = conj(c(xi)).
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const std::size_t cm = lattice.conjugate_index(m);
    if (cm == m) {
      c[m] = Complex(c[m].real(), 0.0);
    } else if (cm > m) {
      c[cm] = std::conj(c[m]);
    }
  }
  return c;
}

inline SpectralState random_band_state(const WavenumberLattice& lattice, int band,
                                       std::mt19937_64& rng, double scale = 1.0) {
  SpectralState s;
  for (auto& c : s.coeffs) c = random_band_coeffs(lattice, band, rng, scale);
  return s;
}

/// rho = eps exp(-|x - c|^2 / sigma^2) about the box centre (minimal image),
/// u = rho * direction.
inline PhysicalState gaussian_state(const WavenumberLattice& lattice, double eps, double sigma,
                                    const Vec3& direction) {
  PhysicalState s = PhysicalState::zeros(lattice);
  const double L = lattice.box_length();
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const auto ijk = lattice.coords(m);
    double d2 = 0.0;
    for (int a : ijk) {
      double x = a * lattice.spacing() - 0.5 * L;
      x -= L * std::round(x / L);
      d2 += x * x;
    }
    const double g = eps * std::exp(-d2 / (sigma * sigma));
    s.rho()[m] = g;
    for (int a = 0; a < 3; ++a) s.u(a)[m] = g * direction[a];
  }
  return s;
}

inline double max_abs_diff(const RealField& a, const RealField& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double max_abs(const RealField& a) {
  double worst = 0.0;
  for (double v : a) worst = std::max(worst, std::abs(v));
  return worst;
}

/// sqrt(sum over components and modes |a - b|^2)
inline double spectral_distance(const SpectralState& a, const SpectralState& b) {
  double s = 0.0;
  for (int c = 0; c < 4; ++c)
    for (std::size_t m = 0; m < a.coeffs[c].size(); ++m) s += std::norm(a.coeffs[c][m] - b.coeffs[c][m]);
  return std::sqrt(s);
}

inline double spectral_size(const SpectralState& a) {
  double s = 0.0;
  for (const auto& c : a.coeffs)
    for (const auto& v : c) s += std::norm(v);
  return std::sqrt(s);
}

}  // namespace greenprop::testing
