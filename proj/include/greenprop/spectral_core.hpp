#pragma once

// Periodic-box discretization: wavenumber lattice, Fourier transforms,
// derivative multipliers, two-thirds dealiasing and discrete norms.
//
// Fields live on an n^3 grid over [0, L)^3 in row-major order
// (axis 0 slowest). Spectral coefficients use the same layout; index i on
// an axis maps to the signed integer j = i for i < n/2 and j = i - n
// otherwise. Normalization: the zero mode equals the grid mean, so
// f(x) = sum_xi f_hat(xi) exp(i xi . x) and ||f||_2^2 = |Omega| sum |f_hat|^2.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace greenprop {

using Complex = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<Complex>;
using Vec3 = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;

/// Physical constants of the viscous model: mu(rho) = mu rho^alpha,
/// lambda(rho) = lambda_bulk rho^alpha, P = rho^gamma / gamma.
class ViscosityParams {
 public:
  /// Throws ConfigurationError unless mu > 0, 2 mu + 3 lambda_bulk >= 0,
  /// alpha > 0 and gamma > 1.
  ViscosityParams(double mu, double lambda_bulk, double alpha, double gamma);

  double mu() const { return mu_; }
  double lambda_bulk() const { return lambda_bulk_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  /// Longitudinal viscosity 2 mu + lambda_bulk.
  double nu() const { return 2.0 * mu_ + lambda_bulk_; }

 private:
  double mu_;
  double lambda_bulk_;
  double alpha_;
  double gamma_;
};

class FftEngine;

class WavenumberLattice {
 public:
  /// Throws ConfigurationError for odd n, n outside [8, 512] or L <= 0.
  WavenumberLattice(int n, double box_length);

  int n() const { return n_; }
  double box_length() const { return box_length_; }
  std::size_t size() const { return size_; }
  double spacing() const { return box_length_ / n_; }
  double cell_volume() const;
  double volume() const;
  /// 2 pi / L.
  double unit_wavenumber() const;

  /// Signed integer offset j in {-n/2, ..., n/2 - 1} for grid index i.
  int signed_index(int i) const { return i < n_ / 2 ? i : i - n_; }
  double wavenumber(int i) const { return unit_wavenumber() * signed_index(i); }
  /// Same as wavenumber() except the Nyquist index maps to zero.
  double odd_wavenumber(int i) const { return i == n_ / 2 ? 0.0 : wavenumber(i); }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }
  std::array<int, 3> coords(std::size_t mode) const;
  /// Index of the mode -xi (mod n on each axis).
  std::size_t conjugate_index(std::size_t mode) const;

  Vec3 wave_vector(std::size_t mode) const;
  /// Wave vector with Nyquist components zeroed; satisfies
  /// symmetric_wave_vector(conjugate_index(m)) == -symmetric_wave_vector(m).
  Vec3 symmetric_wave_vector(std::size_t mode) const;

  /// Two-thirds rule: false exactly when some |j| > n/3.
  bool keeps(std::size_t mode) const { return mask_[mode] != 0; }
  const std::vector<unsigned char>& dealias_mask() const { return mask_; }

  const FftEngine& fft() const { return *fft_; }

 private:
  int n_;
  double box_length_;
  std::size_t size_;
  std::vector<unsigned char> mask_;
  std::shared_ptr<FftEngine> fft_;
};

/// Same as the WavenumberLattice constructor.
WavenumberLattice build_lattice(int n, double box_length);

/// Version string of the FFT backend.
const char* fft_backend_version();

/// Four-component perturbation (rho, u1, u2, u3) on the grid.
struct PhysicalState {
  std::array<RealField, 4> components;

  RealField& rho() { return components[0]; }
  const RealField& rho() const { return components[0]; }
  RealField& u(int axis) { return components[1 + axis]; }
  const RealField& u(int axis) const { return components[1 + axis]; }

  static PhysicalState zeros(const WavenumberLattice& lattice);
};

struct SpectralState {
  std::array<ComplexField, 4> coeffs;

  static SpectralState zeros(const WavenumberLattice& lattice);
};

/// Owns FFTW plans and scratch buffers for one grid size. Not reentrant.
class FftEngine {
 public:
  explicit FftEngine(int n);
  ~FftEngine();
  FftEngine(const FftEngine&) = delete;
  FftEngine& operator=(const FftEngine&) = delete;

  /// Full-spectrum forward transform scaled by 1/n^3.
  void forward(std::span<const double> in, std::span<Complex> out) const;
  /// Inverse transform; assumes `in` is Hermitian symmetric.
  void inverse(std::span<const Complex> in, std::span<double> out) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ComplexField to_spectral(const RealField& field, const WavenumberLattice& lattice);
RealField to_physical(const ComplexField& coeffs, const WavenumberLattice& lattice);
SpectralState to_spectral(const PhysicalState& state, const WavenumberLattice& lattice);
PhysicalState to_physical(const SpectralState& spec, const WavenumberLattice& lattice);

/// Multiplies every mode by (i xi_axis)^order, order in [0, 4]. Odd orders
/// use the Nyquist-free wavenumber.
ComplexField spectral_derivative(const ComplexField& coeffs, const WavenumberLattice& lattice,
                                 int axis, int order);
ComplexField spectral_derivative(const SpectralState& spec, const WavenumberLattice& lattice,
                                 int component, int axis, int order);

SpectralState dealias(const SpectralState& spec, const WavenumberLattice& lattice);
void dealias_in_place(ComplexField& coeffs, const WavenumberLattice& lattice);

/// Spectral interpolation onto a lattice with the same box length: shared
/// modes are copied, the rest zero-filled. The source Nyquist plane is dropped.
ComplexField resample(const ComplexField& coeffs, const WavenumberLattice& from,
                      const WavenumberLattice& to);

/// Largest |c(-xi) - conj(c(xi))| over the lattice.
double hermitian_defect(const ComplexField& coeffs, const WavenumberLattice& lattice);

/// Norm exponent restricted to {1, 4/3, 2, 4, inf}.
class LpExponent {
 public:
  static LpExponent finite(double p);
  static LpExponent infinity() { return LpExponent(0.0, true); }
  /// Accepts "1", "4/3", "2", "4", "inf".
  static LpExponent parse(const std::string& text);

  bool is_infinite() const { return infinite_; }
  double value() const { return value_; }
  std::string label() const;

 private:
  LpExponent(double value, bool infinite) : value_(value), infinite_(infinite) {}
  double value_;
  bool infinite_;
};

/// Midpoint Riemann-sum L^p norm of the pointwise Euclidean magnitude across
/// the given components.
double lp_norm(std::span<const RealField> components, LpExponent p,
               const WavenumberLattice& lattice);
double lp_norm(const RealField& field, LpExponent p, const WavenumberLattice& lattice);

/// sqrt(|Omega| sum |xi|^{2k} |V_hat(xi)|^2) over all four components, k in [0, 4].
double sobolev_seminorm(const SpectralState& spec, int k, const WavenumberLattice& lattice);

}  // namespace greenprop
