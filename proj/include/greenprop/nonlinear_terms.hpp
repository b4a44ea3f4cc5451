#pragma once

// Nonlinear right-hand side of the perturbation system around rho = 1:
//   N_rho = -div(rho u)
//   N_u   = N1 + N2 + N3 + N4 with
//     N1 = -u . grad u
//     N2 = -H_gamma(rho) grad rho
//     N3 = G_alpha(rho) (2 mu grad rho . Du + lambda (div u) grad rho)
//     N4 = H_alpha(rho) (mu lap u + (mu + lambda) grad div u)
// Derivatives are spectral, products pointwise, one dealias pass at the end.

#include <array>

#include "greenprop/spectral_core.hpp"

namespace greenprop {

/// (1 + rho)^{gamma - 2} - 1
double h_gamma(double rho, double gamma);
/// alpha (1 + rho)^{alpha - 2}
double g_alpha(double rho, double alpha);
/// (1 + rho)^{alpha - 1} - 1
double h_alpha(double rho, double alpha);

struct NonlinearRHS {
  SpectralState coeffs;  ///< dealiased (N_rho, N_u)

  /// Grid values of N_rho and N_u.
  PhysicalState fields(const WavenumberLattice& lattice) const { return to_physical(coeffs, lattice); }
};

/// Side products of one RHS evaluation.
struct RhsDiagnostics {
  double n4_sup = 0.0;  ///< max |N4| over grid and components, before dealiasing
  /// Energy-balance integrals
  ///   -int rho^2 div u, -int (u . grad rho) rho, int N1 . u, ..., int N4 . u
  std::array<double, 6> energy_terms{};
};

struct RhsOptions {
  double vacuum_floor = 1e-6;
  RhsDiagnostics* diagnostics = nullptr;
};

/// Evaluates N(V) from a spectral state. Throws VacuumError when
/// min(1 + rho) <= vacuum_floor.
NonlinearRHS evaluate_rhs(const SpectralState& state, const ViscosityParams& params,
                          const WavenumberLattice& lattice, const RhsOptions& options = {});

/// Same, for a physical/spectral pair; throws ConsistencyError when the two
/// do not describe the same state.
NonlinearRHS evaluate_rhs(const PhysicalState& physical, const SpectralState& spectral,
                          const ViscosityParams& params, const WavenumberLattice& lattice,
                          const RhsOptions& options = {});

/// sup|H_alpha(rho)| / (|alpha - 1| sup|rho|). Throws DomainError when
/// alpha == 1 or sup|rho| > 1/2; returns 0 for rho == 0.
double h_alpha_smallness_check(const RealField& rho, double alpha);

enum class CompositionFunction { HGamma, HAlpha };

/// ||grad^k f(rho)||_p / ||grad^k rho||_p with f applied pointwise and the
/// derivative tensor assembled spectrally; p in {2, inf}, k in [1, 4].
/// `exponent` is gamma for HGamma and alpha for HAlpha. Returns 0 when both
/// norms vanish; throws DegenerateInputError when only the denominator does.
double composition_bound_check(const RealField& rho, CompositionFunction f, double exponent,
                               int k, LpExponent p, const WavenumberLattice& lattice);

/// Euclidean norm field of the full k-th derivative tensor, built from the
/// distinct mixed partials weighted by their multiplicities.
RealField derivative_tensor_magnitude(const ComplexField& coeffs, int k,
                                      const WavenumberLattice& lattice);

}  // namespace greenprop
