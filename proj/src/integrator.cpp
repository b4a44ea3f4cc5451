#include "greenprop/integrator.hpp"

#include <cmath>

#include "greenprop/csv.hpp"
#include "greenprop/errors.hpp"
#include "greenprop/parallel.hpp"

namespace greenprop {

namespace {

using Matrix2c = Eigen::Matrix<Complex, 2, 2>;

constexpr double kTaylorThreshold = 1e-2;

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// phi_k(z) for scalar z
double phi_scalar(int order, double z) {
  if (std::abs(z) < kTaylorThreshold) {
    double sum = 0.0, power = 1.0;
    for (int j = 0; j <= 10; ++j) {
      sum += power / factorial(j + order);
      power *= z;
    }
    return sum;
  }
  const double e = std::expm1(z);
  return order == 1 ? e / z : (e - z) / (z * z);
}

}  // namespace

ModeOperator phi_operator(int order, double dt, double xi_mag, const ViscosityParams& params) {
  if (order != 1 && order != 2) throw UnsupportedOrderError("phi_operator: order must be 1 or 2");
  if (!(dt > 0.0)) throw DomainError("phi_operator: dt must be positive");
  const double r = xi_mag;
  const double nu = params.nu();
  ModeOperator op;
  op.transverse = phi_scalar(order, -dt * params.mu() * r * r);
  if (r == 0.0) {
    const double v = 1.0 / factorial(order);
    op.rho_rho = v;
    op.coupling = 0.0;
    op.longitudinal = v;
    op.transverse = v;
    return op;
  }
  // density / longitudinal block in the basis (rho, xi' . u)
  Matrix2c s;
  const double norm1 = r * dt * (1.0 + nu * r);
  if (norm1 < kTaylorThreshold) {
    Matrix2c z;
    z << Complex(0.0), Complex(0.0, -r * dt), Complex(0.0, -r * dt), Complex(-nu * r * r * dt);
    Matrix2c power = Matrix2c::Identity();
    s = Matrix2c::Zero();
    for (int j = 0; j <= 12; ++j) {
      s += power / factorial(j + order);
      power = power * z;
    }
  } else {
    const SymbolCoefficients c = stable_entries(dt, r, params);
    const double gm = c.g_minus.real();
    const double m = c.m.real();
    Matrix2c p1;
    p1 << Complex((m + nu * (1.0 - gm)) / dt), Complex(0.0, (gm - 1.0) / (dt * r)),
        Complex(0.0, (gm - 1.0) / (dt * r)), Complex(m / dt);
    if (order == 1) {
      s = p1;
    } else {
      Matrix2c inv;  // L^{-1} restricted to the block
      inv << Complex(nu), Complex(0.0, -1.0 / r), Complex(0.0, -1.0 / r), Complex(0.0);
      s = inv * (Matrix2c::Identity() - p1) / dt;
    }
  }
  op.rho_rho = s(0, 0).real();
  op.coupling = Complex(0.0, s(1, 0).imag() / r);
  op.longitudinal = s(1, 1).real();
  return op;
}

Matrix4c phi1_matrix(double dt, const Vec3& xi, const ViscosityParams& params) {
  const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
  return phi_operator(1, dt, r, params).to_matrix(xi);
}

Matrix4c phi2_matrix(double dt, const Vec3& xi, const ViscosityParams& params) {
  const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
  return phi_operator(2, dt, r, params).to_matrix(xi);
}

const char* to_string(Scheme scheme) {
  return scheme == Scheme::ETDRK2 ? "ETDRK2" : "ExponentialEuler";
}

Scheme parse_scheme(const std::string& text) {
  if (text == "ETDRK2") return Scheme::ETDRK2;
  if (text == "ExponentialEuler" || text == "EE") return Scheme::ExponentialEuler;
  throw ConfigurationError("unknown scheme '" + text + "'");
}

void SchemeConfig::validate() const {
  if (!(dt > 0.0) || dt > 0.5) throw ConfigurationError("scheme: dt must lie in (0, 0.5], got " + format_number(dt));
  if (!(t_end >= dt)) throw ConfigurationError("scheme: t_end must be at least dt");
  if (diagnostics_cadence < 1) throw ConfigurationError("scheme: diagnostics_cadence must be >= 1");
}

long SchemeConfig::steps() const { return std::lround(t_end / dt); }

namespace {

detail::RadialOperatorTable scaled_phi_table(const WavenumberLattice& lattice, int order, double dt,
                                             const ViscosityParams& params) {
  return detail::RadialOperatorTable(lattice, [&](double r) {
    ModeOperator op = phi_operator(order, dt, r, params);
    op.rho_rho *= dt;
    op.coupling *= dt;
    op.transverse *= dt;
    op.longitudinal *= dt;
    return op;
  });
}

void check_finite(const SpectralState& s) {
  for (const auto& c : s.coeffs)
    for (const auto& v : c)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw NumericalError("step: non-finite state");
}

}  // namespace

Stepper::Stepper(const WavenumberLattice& lattice, const ViscosityParams& params, double dt,
                 Scheme scheme, bool linear_only, double vacuum_floor)
    : lattice_(lattice),
      params_(params),
      dt_(dt),
      scheme_(scheme),
      linear_only_(linear_only),
      vacuum_floor_(vacuum_floor),
      propagator_(lattice, [&](double r) { return mode_operator(dt, r, params, SymbolPart::Full); }),
      phi1_(scaled_phi_table(lattice, 1, dt, params)),
      phi2_(scaled_phi_table(lattice, 2, dt, params)) {
  if (!(dt > 0.0)) throw DomainError("stepper: dt must be positive");
}

SpectralState Stepper::advance(const SpectralState& state, RhsDiagnostics* diagnostics) const {
  const std::size_t size = lattice_.size();
  for (const auto& c : state.coeffs)
    if (c.size() != size) throw ShapeError("step: state does not match lattice");
  SpectralState out;
  if (linear_only_) {
    detail::apply_table(propagator_, lattice_, state, out);
    check_finite(out);
    return out;
  }
  const RhsOptions first{vacuum_floor_, diagnostics};
  const NonlinearRHS n0 = evaluate_rhs(state, params_, lattice_, first);
  for (auto& c : out.coeffs) c.resize(size);
  // out = G V + dt phi1 N(V)
  detail::parallel_for(size, [&](std::size_t begin, std::size_t end) {
    Complex v[4], w[4];
    for (std::size_t m = begin; m < end; ++m) {
      const int s = detail::symmetric_integer_radius_sq(lattice_, m);
      const Vec3 xi = lattice_.symmetric_wave_vector(m);
      for (int c = 0; c < 4; ++c) {
        v[c] = state.coeffs[c][m];
        w[c] = n0.coeffs.coeffs[c][m];
      }
      propagator_.at(s).apply(xi, v);
      phi1_.at(s).apply(xi, w);
      for (int c = 0; c < 4; ++c) out.coeffs[c][m] = v[c] + w[c];
    }
  });
  if (scheme_ == Scheme::ETDRK2) {
    const NonlinearRHS n1 = evaluate_rhs(out, params_, lattice_, {vacuum_floor_, nullptr});
    detail::parallel_for(size, [&](std::size_t begin, std::size_t end) {
      Complex w[4];
      for (std::size_t m = begin; m < end; ++m) {
        for (int c = 0; c < 4; ++c) w[c] = n1.coeffs.coeffs[c][m] - n0.coeffs.coeffs[c][m];
        phi2_.at(detail::symmetric_integer_radius_sq(lattice_, m)).apply(lattice_.symmetric_wave_vector(m), w);
        for (int c = 0; c < 4; ++c) out.coeffs[c][m] += w[c];
      }
    });
  }
  check_finite(out);
  return out;
}

SpectralState step(const SpectralState& state, double dt, const ViscosityParams& params,
                   Scheme scheme, const WavenumberLattice& lattice, bool linear_only) {
  return Stepper(lattice, params, dt, scheme, linear_only).advance(state);
}

const char* to_string(Termination reason) {
  switch (reason) {
    case Termination::Completed: return "Completed";
    case Termination::VacuumAbort: return "VacuumAbort";
    case Termination::ThresholdViolation: return "ThresholdViolation";
    case Termination::NumericalError: return "NumericalError";
  }
  return "?";
}

EnergySample energy_sample(const SpectralState& state, double t, const ViscosityParams& params,
                           const WavenumberLattice& lattice) {
  EnergySample e;
  e.t = t;
  const double l2 = sobolev_seminorm(state, 0, lattice);
  e.energy = 0.5 * l2 * l2;
  RealField terms(lattice.size());
  const double mu = params.mu();
  const double cross = params.mu() + params.lambda_bulk();
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const Vec3 xi = lattice.symmetric_wave_vector(m);
    const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    const Complex dot = xi[0] * state.coeffs[1][m] + xi[1] * state.coeffs[2][m] + xi[2] * state.coeffs[3][m];
    const double u2 = std::norm(state.coeffs[1][m]) + std::norm(state.coeffs[2][m]) + std::norm(state.coeffs[3][m]);
    terms[m] = mu * r2 * u2 + cross * std::norm(dot);
  }
  e.dissipation = detail::pairwise_sum(terms) * lattice.volume();
  return e;
}

RunRecord run_simulation(const PhysicalState& initial, const SchemeConfig& config,
                         const ViscosityParams& params, const WavenumberLattice& lattice,
                         const RunOptions& options) {
  config.validate();
  RunRecord rec;
  rec.config = config;
  rec.params = params;
  rec.options = options;
  rec.n = lattice.n();
  rec.box_length = lattice.box_length();

  const long steps = config.steps();
  SpectralState state = to_spectral(initial, lattice);
  const Stepper stepper(lattice, params, config.dt, config.scheme, options.linear_only, options.vacuum_floor);

  long s = 0;
  try {
    for (double v : initial.rho())
      if (!(1.0 + v > options.vacuum_floor))
        throw VacuumError("initial data: min(1 + rho) <= floor " + format_number(options.vacuum_floor));
    for (;; ++s) {
      const double t = static_cast<double>(s) * config.dt;
      rec.steps_taken = s;
      rec.final_time = t;
      const bool sample = s % config.diagnostics_cadence == 0;
      RhsDiagnostics diag;
      if (sample) {
        const NormBundle bundle = sample_norms(state, lattice, t);
        rec.samples.push_back(bundle);
        const AprioriStatus status = check_apriori(bundle, options.eta);
        rec.monitors.push_back(status);
        rec.mass.push_back(state.coeffs[0][0].real());
        rec.energy.push_back(energy_sample(state, t, params, lattice));
        if (!status.ok && options.enforce_apriori) {
          rec.reason = Termination::ThresholdViolation;
          rec.message = status.bound + " bound violated at t = " + format_number(t) + " by " +
                        format_number(status.margin);
          rec.n4_sup.push_back(0.0);
          break;
        }
      }
      if (s == steps) {
        if (sample && !options.linear_only)
          evaluate_rhs(state, params, lattice, {options.vacuum_floor, &diag});
      } else {
        state = stepper.advance(state, sample && !options.linear_only ? &diag : nullptr);
      }
      if (sample) {
        rec.energy.back().terms = diag.energy_terms;
        rec.n4_sup.push_back(diag.n4_sup);
      }
      if (s == steps) break;
    }
  } catch (const VacuumError& e) {
    rec.reason = Termination::VacuumAbort;
    rec.message = e.what();
  } catch (const NumericalError& e) {
    rec.reason = Termination::NumericalError;
    rec.message = std::string(e.what()) + " (step " + std::to_string(s) + ")";
  }
  if (rec.n4_sup.size() < rec.samples.size()) rec.n4_sup.resize(rec.samples.size(), 0.0);
  if (options.keep_final_state) rec.final_state = state;
  return rec;
}

std::vector<std::pair<double, double>> energy_residuals(const RunRecord& record) {
  std::vector<std::pair<double, double>> out;
  const auto& e = record.energy;
  for (std::size_t i = 1; i + 1 < e.size(); ++i) {
    const double dedt = (e[i + 1].energy - e[i - 1].energy) / (e[i + 1].t - e[i - 1].t);
    double sum = 0.0;
    for (double v : e[i].terms) sum += v;
    out.emplace_back(e[i].t, dedt + e[i].dissipation - sum);
  }
  return out;
}

}  // namespace greenprop
