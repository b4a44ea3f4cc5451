#include "greenprop/nonlinear_terms.hpp"

#include <algorithm>
#include <cmath>

#include "greenprop/errors.hpp"
#include "greenprop/parallel.hpp"

namespace greenprop {

namespace {

void require_non_vacuum(double rho, double floor = 0.0) {
  if (!(1.0 + rho > floor))
    throw VacuumError("vacuum: 1 + rho = " + std::to_string(1.0 + rho) + " <= " +
                      std::to_string(floor));
}

double sum_times_cell(RealField& terms, const WavenumberLattice& lattice) {
  return detail::pairwise_sum(terms) * lattice.cell_volume();
}

}  // namespace

double h_gamma(double rho, double gamma) {
  require_non_vacuum(rho);
  return std::pow(1.0 + rho, gamma - 2.0) - 1.0;
}

double g_alpha(double rho, double alpha) {
  require_non_vacuum(rho);
  return alpha * std::pow(1.0 + rho, alpha - 2.0);
}

double h_alpha(double rho, double alpha) {
  require_non_vacuum(rho);
  if (alpha == 1.0) return 0.0;
  return std::expm1((alpha - 1.0) * std::log1p(rho));
}

NonlinearRHS evaluate_rhs(const SpectralState& state, const ViscosityParams& params,
                          const WavenumberLattice& lattice, const RhsOptions& options) {
  for (const auto& c : state.coeffs)
    if (c.size() != lattice.size()) throw ShapeError("evaluate_rhs: state does not match lattice");
  return evaluate_rhs(to_physical(state, lattice), state, params, lattice, options);
}

NonlinearRHS evaluate_rhs(const PhysicalState& physical, const SpectralState& spectral,
                          const ViscosityParams& params, const WavenumberLattice& lattice,
                          const RhsOptions& options) {
  const std::size_t size = lattice.size();
  for (int c = 0; c < 4; ++c)
    if (physical.components[c].size() != size || spectral.coeffs[c].size() != size)
      throw ShapeError("evaluate_rhs: state does not match lattice");

  const RealField& rho = physical.rho();
  double rho_min = rho.empty() ? 0.0 : *std::min_element(rho.begin(), rho.end());
  if (!(1.0 + rho_min > options.vacuum_floor))
    throw VacuumError("evaluate_rhs: min(1 + rho) = " + std::to_string(1.0 + rho_min) +
                      " <= floor " + std::to_string(options.vacuum_floor));

  // Pair consistency: zero modes against grid means, plus rho pointwise.
  {
    double scale = 0.0;
    for (double v : rho) scale = std::max(scale, std::abs(v));
    for (int c = 0; c < 4; ++c) {
      double mean = 0.0;
      for (double v : physical.components[c]) mean += v;
      mean /= static_cast<double>(size);
      if (std::abs(mean - spectral.coeffs[c][0]) > 1e-10 * (1.0 + std::abs(mean)))
        throw ConsistencyError("evaluate_rhs: zero mode of component " + std::to_string(c) +
                               " does not match the grid mean");
    }
    const RealField back = to_physical(spectral.coeffs[0], lattice);
    double worst = 0.0;
    for (std::size_t m = 0; m < size; ++m) worst = std::max(worst, std::abs(back[m] - rho[m]));
    if (worst > 1e-10 * std::max(scale, 1e-300) && worst > 1e-14)
      throw ConsistencyError("evaluate_rhs: physical and spectral density disagree by " +
                             std::to_string(worst));
  }

  const double mu = params.mu();
  const double lam = params.lambda_bulk();
  const double alpha = params.alpha();
  const double gamma = params.gamma();
  const bool viscous_coupling = alpha != 1.0;

  std::array<RealField, 3> drho;
  std::array<std::array<RealField, 3>, 3> du;  // du[i][j] = d_j u_i
  for (int j = 0; j < 3; ++j) drho[j] = to_physical(spectral_derivative(spectral.coeffs[0], lattice, j, 1), lattice);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      du[i][j] = to_physical(spectral_derivative(spectral.coeffs[1 + i], lattice, j, 1), lattice);

  // mu lap u + (mu + lambda) grad div u, only needed when H_alpha != 0
  std::array<RealField, 3> visc;
  if (viscous_coupling) {
    std::array<ComplexField, 3> w;
    for (auto& c : w) c.resize(size);
    detail::parallel_for(size, [&](std::size_t begin, std::size_t end) {
      for (std::size_t m = begin; m < end; ++m) {
        const Vec3 xi = lattice.symmetric_wave_vector(m);
        const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        const Complex dot = xi[0] * spectral.coeffs[1][m] + xi[1] * spectral.coeffs[2][m] +
                            xi[2] * spectral.coeffs[3][m];
        for (int i = 0; i < 3; ++i)
          w[i][m] = -mu * r2 * spectral.coeffs[1 + i][m] - (mu + lam) * xi[i] * dot;
      }
    });
    for (int i = 0; i < 3; ++i) visc[i] = to_physical(w[i], lattice);
  }

  std::array<RealField, 3> flux;  // rho u
  std::array<RealField, 3> nu_total;
  for (int i = 0; i < 3; ++i) {
    flux[i].resize(size);
    nu_total[i].resize(size);
  }
  RhsDiagnostics* diag = options.diagnostics;
  std::array<RealField, 6> energy;
  RealField n4_abs;
  if (diag != nullptr) {
    for (auto& e : energy) e.resize(size);
    n4_abs.assign(size, 0.0);
  }

  detail::parallel_for(size, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      const double r = rho[m];
      const double u[3] = {physical.u(0)[m], physical.u(1)[m], physical.u(2)[m]};
      const double g[3] = {drho[0][m], drho[1][m], drho[2][m]};
      const double div = du[0][0][m] + du[1][1][m] + du[2][2][m];
      const double hg = std::pow(1.0 + r, gamma - 2.0) - 1.0;
      const double ga = alpha * std::pow(1.0 + r, alpha - 2.0);
      const double ha = viscous_coupling ? std::expm1((alpha - 1.0) * std::log1p(r)) : 0.0;
      double e_n[4] = {0.0, 0.0, 0.0, 0.0};
      double n4_max = 0.0;
      for (int i = 0; i < 3; ++i) {
        flux[i][m] = r * u[i];
        double n1 = 0.0;
        double strain = 0.0;  // sum_j d_j rho (Du)_{ji}
        for (int j = 0; j < 3; ++j) {
          n1 -= u[j] * du[i][j][m];
          strain += g[j] * 0.5 * (du[j][i][m] + du[i][j][m]);
        }
        const double n2 = -hg * g[i];
        const double n3 = ga * (2.0 * mu * strain + lam * div * g[i]);
        const double n4 = viscous_coupling ? ha * visc[i][m] : 0.0;
        nu_total[i][m] = n1 + n2 + n3 + n4;
        e_n[0] += n1 * u[i];
        e_n[1] += n2 * u[i];
        e_n[2] += n3 * u[i];
        e_n[3] += n4 * u[i];
        n4_max = std::max(n4_max, std::abs(n4));
      }
      if (diag != nullptr) {
        energy[0][m] = -r * r * div;
        energy[1][m] = -(u[0] * g[0] + u[1] * g[1] + u[2] * g[2]) * r;
        for (int q = 0; q < 4; ++q) energy[2 + q][m] = e_n[q];
        n4_abs[m] = n4_max;
      }
    }
  });

  NonlinearRHS out;
  out.coeffs.coeffs[0].assign(size, Complex{});
  for (int j = 0; j < 3; ++j) {
    const ComplexField f = to_spectral(flux[j], lattice);
    const ComplexField d = spectral_derivative(f, lattice, j, 1);
    for (std::size_t m = 0; m < size; ++m) out.coeffs.coeffs[0][m] -= d[m];
  }
  for (int i = 0; i < 3; ++i) out.coeffs.coeffs[1 + i] = to_spectral(nu_total[i], lattice);
  for (auto& c : out.coeffs.coeffs) dealias_in_place(c, lattice);
  out.coeffs.coeffs[0][0] = Complex{};

  if (diag != nullptr) {
    diag->n4_sup = n4_abs.empty() ? 0.0 : *std::max_element(n4_abs.begin(), n4_abs.end());
    for (int q = 0; q < 6; ++q) diag->energy_terms[q] = sum_times_cell(energy[q], lattice);
  }
  for (const auto& c : out.coeffs.coeffs)
    for (const auto& v : c)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw NumericalError("evaluate_rhs: non-finite nonlinear term");
  return out;
}

double h_alpha_smallness_check(const RealField& rho, double alpha) {
  if (alpha == 1.0) throw DomainError("h_alpha_smallness_check: ratio undefined for alpha = 1");
  double sup_rho = 0.0;
  double sup_h = 0.0;
  for (double r : rho) {
    sup_rho = std::max(sup_rho, std::abs(r));
    sup_h = std::max(sup_h, std::abs(h_alpha(r, alpha)));
  }
  if (sup_rho > 0.5) throw DomainError("h_alpha_smallness_check: requires sup|rho| <= 1/2");
  if (sup_rho == 0.0) return 0.0;
  return sup_h / (std::abs(alpha - 1.0) * sup_rho);
}

RealField derivative_tensor_magnitude(const ComplexField& coeffs, int k,
                                      const WavenumberLattice& lattice) {
  if (k < 0 || k > 4)
    throw UnsupportedOrderError("derivative tensor: order must lie in [0, 4]");
  RealField sq(lattice.size(), 0.0);
  // multi-indices (a0, a1, a2) with a0 + a1 + a2 = k, weight k! / (a0! a1! a2!)
  const auto fact = [](int v) {
    int f = 1;
    for (int i = 2; i <= v; ++i) f *= i;
    return f;
  };
  for (int a0 = 0; a0 <= k; ++a0) {
    for (int a1 = 0; a0 + a1 <= k; ++a1) {
      const int a2 = k - a0 - a1;
      const double weight = static_cast<double>(fact(k)) / (fact(a0) * fact(a1) * fact(a2));
      ComplexField d = coeffs;
      if (a0 > 0) d = spectral_derivative(d, lattice, 0, a0);
      if (a1 > 0) d = spectral_derivative(d, lattice, 1, a1);
      if (a2 > 0) d = spectral_derivative(d, lattice, 2, a2);
      const RealField f = to_physical(d, lattice);
      for (std::size_t m = 0; m < sq.size(); ++m) sq[m] += weight * f[m] * f[m];
    }
  }
  for (double& v : sq) v = std::sqrt(v);
  return sq;
}

double composition_bound_check(const RealField& rho, CompositionFunction f, double exponent,
                               int k, LpExponent p, const WavenumberLattice& lattice) {
  if (k < 1 || k > 4) throw UnsupportedOrderError("composition_bound_check: k must lie in [1, 4]");
  if (!(p.is_infinite() || p.value() == 2.0))
    throw ConfigurationError("composition_bound_check: p must be 2 or inf");
  if (rho.size() != lattice.size()) throw ShapeError("composition_bound_check: field does not match lattice");
  RealField composed(rho.size());
  for (std::size_t m = 0; m < rho.size(); ++m) {
    if (std::abs(rho[m]) > 1.0) throw DomainError("composition_bound_check: requires sup|rho| <= 1");
    composed[m] = f == CompositionFunction::HGamma ? h_gamma(rho[m], exponent) : h_alpha(rho[m], exponent);
  }
  const auto norm = [&](const RealField& field) {
    const ComplexField c = to_spectral(field, lattice);
    if (!p.is_infinite()) {
      SpectralState s;
      s.coeffs[0] = c;
      for (int q = 1; q < 4; ++q) s.coeffs[q].assign(c.size(), Complex{});
      return sobolev_seminorm(s, k, lattice);
    }
    return lp_norm(derivative_tensor_magnitude(c, k, lattice), p, lattice);
  };
  const double num = norm(composed);
  const double den = norm(rho);
  if (den == 0.0) {
    if (num == 0.0) return 0.0;
    throw DegenerateInputError("composition_bound_check: grad^k rho vanishes but grad^k f(rho) does not");
  }
  return num / den;
}

}  // namespace greenprop
