#pragma once

// Norms of the Green-function parts: radial quadrature of the symbol on R^3,
// inverse transforms on a truncated box, and log-linear decay fits.

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "greenprop/green_symbol.hpp"

namespace greenprop {

struct NormSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::string label;

  /// Throws DomainError unless times are strictly increasing and values finite, >= 0.
  void validate() const;
};

enum class DecayModel { Algebraic, Exponential };

const char* to_string(DecayModel model);

struct DecayFit {
  DecayModel model = DecayModel::Algebraic;
  double fitted_rate = 0.0;
  std::array<double, 2> window{};
  double r_squared = 0.0;
  double theory_rate = 0.0;
  double tolerance = 0.0;
  bool one_sided = false;
  int samples = 0;
  bool pass = false;
};

/// Least squares of log(value) on log(1 + t) (Algebraic) or t (Exponential)
/// over samples with window[0] <= t <= window[1]. Passes when r^2 >= 0.98 and
/// |fitted - theory| <= tolerance, or fitted >= theory - tolerance if one-sided.
/// Throws ConfigurationError for fewer than 8 samples, DomainError for
/// non-positive values inside the window.
DecayFit fit_decay(const NormSeries& series, DecayModel model, std::array<double, 2> window,
                   double theory_rate, double tolerance, bool one_sided = false);

inline constexpr double kMinRSquared = 0.98;

enum class RadialMode { L2Kernel, L1Symbol };

struct RadialOptions {
  double rel_tol = 1e-8;
  /// Upper frequency limit. Required for HighRegular and Full, whose kernels
  /// are not integrable on R^3.
  std::optional<double> frequency_cutoff;
};

/// Frobenius norm squared of the requested part at radius r.
double symbol_frobenius_sq(double t, double r, const ViscosityParams& params, SymbolPart part);

/// L2Kernel: sqrt(int 4 pi r^2 r^{2k} |M|_F^2 dr / (2 pi)^3)
/// L1Symbol: int 4 pi r^2 r^k |M|_F dr / (2 pi)^3
/// for part in {Low, HighRegular, Full}, k in [0, 2], t > 0.
double symbol_norm_radial(double t, SymbolPart part, int k, RadialMode mode,
                          const ViscosityParams& params, const RadialOptions& options = {});

/// sup over r in [0, r_max] of r^k |M(t, r)|_F.
double symbol_sup_norm(double t, SymbolPart part, int k, const ViscosityParams& params,
                       double r_max);

/// Adaptive Gauss-Kronrod over [0, upper] with break points on a geometric
/// grid and truncation where f falls below 1e-16 of its sampled peak.
double radial_integral(const std::function<double(double)>& f, double upper, double rel_tol);

struct BoxKernel {
  /// L^p norms of the pointwise Frobenius magnitude, p = 1, 4/3, 2, inf.
  std::array<double, 4> norms{};
  /// Fraction of the symbol L^1 mass inside the lattice Nyquist ball.
  double truncation_quality = 0.0;
  /// The 16 entries in row-major order (only when requested).
  std::vector<RealField> components;
};

inline constexpr std::array<const char*, 4> kBoxNormLabels = {"1", "4/3", "2", "inf"};

/// Samples the part (times |xi|^k) on the lattice and transforms back.
/// Requires L >= 20 sqrt(nu t) and n pi / L >= 4.
BoxKernel kernel_on_box(double t, SymbolPart part, const WavenumberLattice& lattice,
                        const ViscosityParams& params, int k = 0, bool keep_components = false);

/// Initial data rho0 = eps exp(-|x|^2 / sigma^2), u0 = rho0 d with |d| = 1,
/// evolved by the linear propagator on R^3 and measured through its transform.
struct GaussianData {
  double eps = 1e-2;
  double sigma = 1.0;
  Vec3 direction{1.0, 0.0, 0.0};
};

/// L2Kernel: ||grad^k V(t)||_2; L1Symbol: the sup-norm bound (2 pi)^{-3} int |xi|^k |V_hat|.
double gaussian_linear_norm(double t, int k, RadialMode mode, const ViscosityParams& params,
                            const GaussianData& data, double rel_tol = 1e-8);

/// ||G_HS(t) f||_2 / ||f||_2 for each time.
std::vector<double> singular_operator_ratios(const SpectralState& f, const std::vector<double>& times,
                                             const ViscosityParams& params,
                                             const WavenumberLattice& lattice);

/// max over lattice modes of |HS coefficient|.
double singular_lattice_sup(double t, const ViscosityParams& params, const WavenumberLattice& lattice);

/// label,t,value,pipeline,truncation_quality
struct KernelRow {
  std::string label;
  double t;
  double value;
  std::string pipeline;
  double truncation_quality;
};

void write_kernel_csv(std::ostream& out, const std::vector<KernelRow>& rows);

/// Evenly log-spaced times in [lo, hi].
std::vector<double> log_spaced(double lo, double hi, int count);

}  // namespace greenprop
