#pragma once

// Exponential time stepping of V_t + L V = N(V). The linear part is carried
// exactly by the symbol; the nonlinearity enters through the phi functions
//   phi1(Z) = Z^{-1} (e^Z - I),   phi2(Z) = Z^{-1} (phi1(Z) - I),   Z = -dt L_hat.

#include <optional>
#include <string>
#include <vector>

#include "greenprop/diagnostics.hpp"
#include "greenprop/green_symbol.hpp"
#include "greenprop/nonlinear_terms.hpp"

namespace greenprop {

/// phi_order(-dt L_hat(xi)) in structured form at radius |xi|; order 1 or 2.
/// Uses a Taylor series when ||dt L_hat|| < 1e-2.
ModeOperator phi_operator(int order, double dt, double xi_mag, const ViscosityParams& params);

Matrix4c phi1_matrix(double dt, const Vec3& xi, const ViscosityParams& params);
Matrix4c phi2_matrix(double dt, const Vec3& xi, const ViscosityParams& params);

enum class Scheme { ExponentialEuler, ETDRK2 };

const char* to_string(Scheme scheme);
/// Accepts "ExponentialEuler"/"EE" and "ETDRK2".
Scheme parse_scheme(const std::string& text);

struct SchemeConfig {
  Scheme scheme = Scheme::ETDRK2;
  double dt = 0.05;
  double t_end = 1.0;
  int diagnostics_cadence = 1;

  /// Throws ConfigurationError unless 0 < dt <= 0.5, t_end >= dt, cadence >= 1.
  void validate() const;
  /// Number of steps, t_end / dt rounded to the nearest integer.
  long steps() const;
};

/// One-step propagator for a fixed (lattice, params, dt, scheme) with the
/// per-radius operator tables built once.
class Stepper {
 public:
  Stepper(const WavenumberLattice& lattice, const ViscosityParams& params, double dt,
          Scheme scheme, bool linear_only = false, double vacuum_floor = 1e-6);

  /// Advances one step. When `diagnostics` is given it receives the side
  /// products of N at the incoming state.
  SpectralState advance(const SpectralState& state, RhsDiagnostics* diagnostics = nullptr) const;

  double dt() const { return dt_; }

 private:
  WavenumberLattice lattice_;
  ViscosityParams params_;
  double dt_;
  Scheme scheme_;
  bool linear_only_;
  double vacuum_floor_;
  detail::RadialOperatorTable propagator_;
  detail::RadialOperatorTable phi1_;  // dt * phi1
  detail::RadialOperatorTable phi2_;  // dt * phi2
};

/// Single step. Throws VacuumError, or NumericalError on non-finite output.
SpectralState step(const SpectralState& state, double dt, const ViscosityParams& params,
                   Scheme scheme, const WavenumberLattice& lattice, bool linear_only = false);

enum class Termination { Completed, VacuumAbort, ThresholdViolation, NumericalError };

const char* to_string(Termination reason);

struct RunOptions {
  double eta = 0.1;
  double vacuum_floor = 1e-6;
  bool linear_only = false;
  /// Stop with ThresholdViolation when the a priori monitor fails.
  bool enforce_apriori = true;
  /// Keep the final spectral state in the record.
  bool keep_final_state = true;
};

/// Per-sample energy bookkeeping:
///   E = 1/2 ||V||_2^2, dissipation = mu ||grad u||^2 + (mu + lambda) ||div u||^2,
///   terms = the six nonlinear integrals.
struct EnergySample {
  double t = 0.0;
  double energy = 0.0;
  double dissipation = 0.0;
  std::array<double, 6> terms{};
};

struct RunRecord {
  SchemeConfig config;
  ViscosityParams params{1.0, 0.0, 1.0, 1.4};
  RunOptions options;
  int n = 0;
  double box_length = 0.0;

  std::vector<NormBundle> samples;
  std::vector<AprioriStatus> monitors;
  std::vector<EnergySample> energy;
  std::vector<double> n4_sup;     ///< max |N4| at each sample
  std::vector<double> mass;       ///< zero mode of rho at each sample

  Termination reason = Termination::Completed;
  std::string message;
  long steps_taken = 0;
  double final_time = 0.0;
  std::optional<SpectralState> final_state;
};

/// Advances `initial` to t_end (or earlier termination), sampling norms,
/// monitors and energy terms every `diagnostics_cadence` steps.
RunRecord run_simulation(const PhysicalState& initial, const SchemeConfig& config,
                         const ViscosityParams& params, const WavenumberLattice& lattice,
                         const RunOptions& options = {});

/// Centered-difference residual dE/dt + dissipation - sum(terms) at every
/// interior energy sample; returns (t, R) pairs.
std::vector<std::pair<double, double>> energy_residuals(const RunRecord& record);

/// E, dissipation and zeroed terms for a state (terms filled by the caller).
EnergySample energy_sample(const SpectralState& state, double t, const ViscosityParams& params,
                           const WavenumberLattice& lattice);

}  // namespace greenprop
