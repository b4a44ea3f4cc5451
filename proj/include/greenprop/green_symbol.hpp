#pragma once

// Fourier symbol of the linearized propagator e^{-tL}.
//
// Per mode xi the generator is
//     L_hat(xi) = [[0, i xi^T], [i xi, mu |xi|^2 I + (mu + lambda) xi xi^T]],
// and the symbol G_hat(t, xi) = exp(-t L_hat(xi)) splits into a transverse
// heat factor exp(-mu |xi|^2 t) and a 2x2 density/longitudinal block whose
// eigenvalues solve lambda^2 + nu |xi|^2 lambda + |xi|^2 = 0.

#include <Eigen/Dense>
#include <complex>

#include "greenprop/spectral_core.hpp"

namespace greenprop {

using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;

struct EigenPair {
  Complex lambda_plus;
  Complex lambda_minus;
  Complex lambda_bar;  ///< (plus + minus) / 2, always real
  Complex delta;       ///< (plus - minus) / 2, real or purely imaginary
};

/// Roots of lambda^2 + nu r^2 lambda + r^2 = 0 on the principal branch. In
/// the real regime the smaller-magnitude root is taken from Vieta to avoid
/// cancellation.
EigenPair eigenvalues(double xi_mag, const ViscosityParams& params);

/// Scalar coefficients of the density/longitudinal block of G_hat(t, xi):
///   m       = (e^{l+ t} - e^{l- t}) / (l+ - l-)
///   g_minus = (l+ e^{l- t} - l- e^{l+ t}) / (l+ - l-)
///   g_plus  = (l+ e^{l+ t} - l- e^{l- t}) / (l+ - l-)
/// evaluated without the 0/0 at the confluent radius 2/nu.
struct SymbolCoefficients {
  Complex m;
  Complex g_minus;
  Complex g_plus;
};

SymbolCoefficients stable_entries(double t, double xi_mag, const ViscosityParams& params);
SymbolCoefficients stable_entries(double t, const EigenPair& eig);

enum class SymbolPart { Full, Low, HighRegular, HighSingular };

const char* to_string(SymbolPart part);
/// Accepts Full/F, Low/L, HighRegular/HR, HighSingular/HS (case-sensitive).
SymbolPart parse_symbol_part(const std::string& text);

/// A 4x4 per-mode operator with the block structure shared by the symbol,
/// its frequency parts and the phi functions:
///   rho' = rho_rho rho + coupling (xi . u)
///   u'   = coupling xi rho + transverse (I - P) u + longitudinal P u,
/// with P = xi xi^T / |xi|^2 (P u = 0 treated as identity split at xi = 0).
struct ModeOperator {
  Complex rho_rho{1.0, 0.0};
  Complex coupling{};
  Complex transverse{1.0, 0.0};
  Complex longitudinal{1.0, 0.0};

  Matrix4c to_matrix(const Vec3& xi) const;
  void apply(const Vec3& xi, Complex* v) const;
};

struct PropagatorMatrix {
  Matrix4c entries;
  double t = 0.0;
  Vec3 xi{};
  SymbolPart part = SymbolPart::Full;
};

/// Smooth cutoff: 1 on [0, 1/2], 0 beyond 1, a monotone C-infinity
/// partition in between.
double cutoff_chi(double xi_mag);

/// Relative gap |l+ - l-| <= kConfluenceTolerance |l_bar| below which the
/// singular part is set to zero.
inline constexpr double kConfluenceTolerance = 1e-3;

/// (1 - chi) * (-l- / (l+ - l-)) * e^{l+ t}, the only nonzero entry of the
/// high-frequency singular part.
Complex singular_coefficient(double t, double xi_mag, const ViscosityParams& params);

/// Structured operator for any part at radius |xi|. Throws DomainError for t < 0.
ModeOperator mode_operator(double t, double xi_mag, const ViscosityParams& params,
                           SymbolPart part);

/// Full symbol G_hat(t, xi). Throws DomainError for t < 0.
PropagatorMatrix symbol(double t, const Vec3& xi, const ViscosityParams& params);

struct SymbolParts {
  PropagatorMatrix low;
  PropagatorMatrix high_regular;
  PropagatorMatrix high_singular;
};

SymbolParts symbol_parts(double t, const Vec3& xi, const ViscosityParams& params);

/// The generator L_hat(xi) itself.
Matrix4c generator_symbol(const Vec3& xi, const ViscosityParams& params);

/// Scaling-and-squaring matrix exponential with a degree-18 Taylor core.
Matrix4c matrix_exponential(const Matrix4c& a);

/// exp(-t L_hat(xi)) computed from the generator only.
Matrix4c expm_oracle(double t, const Vec3& xi, const ViscosityParams& params);

/// Applies the requested part mode by mode. Nyquist components of the wave
/// vector are zeroed so Hermitian symmetry is preserved.
SpectralState apply_propagator(const SpectralState& state, double t,
                               const ViscosityParams& params, SymbolPart part,
                               const WavenumberLattice& lattice);

/// Largest singular value.
double operator_norm(const Matrix4c& a);

namespace detail {
/// sinh(z)/z and cosh(z) with a series branch for |z| < 1e-3.
Complex sinhc(Complex z);
Complex cosh_stable(Complex z);

/// Caches one ModeOperator per distinct integer |j|^2 on a lattice, where
/// xi = (2 pi / L) j with the Nyquist component zeroed.
class RadialOperatorTable {
 public:
  template <class Factory>
  RadialOperatorTable(const WavenumberLattice& lattice, Factory&& make) {
    const int half = lattice.n() / 2;
    const int max_sq = 3 * half * half;
    ops_.resize(static_cast<std::size_t>(max_sq) + 1);
    const double dk = lattice.unit_wavenumber();
    for (int s = 0; s <= max_sq; ++s) ops_[s] = make(dk * std::sqrt(static_cast<double>(s)));
  }
  const ModeOperator& at(int integer_radius_sq) const { return ops_[integer_radius_sq]; }

 private:
  std::vector<ModeOperator> ops_;
};

/// Integer |j|^2 of the symmetric (Nyquist-free) wave vector of a mode.
int symmetric_integer_radius_sq(const WavenumberLattice& lattice, std::size_t mode);

/// Applies a per-radius operator table to every mode of a state.
void apply_table(const RadialOperatorTable& table, const WavenumberLattice& lattice,
                 const SpectralState& in, SpectralState& out);
}  // namespace detail

}  // namespace greenprop
