#include "greenprop/green_symbol.hpp"

#include <cmath>

#include "greenprop/errors.hpp"
#include "greenprop/parallel.hpp"

namespace greenprop {

namespace detail {

Complex sinhc(Complex z) {
  if (std::abs(z) < 1e-3) {
    const Complex z2 = z * z;
    return 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0));
  }
  return std::sinh(z) / z;
}

Complex cosh_stable(Complex z) {
  if (std::abs(z) < 1e-3) {
    const Complex z2 = z * z;
    return 1.0 + z2 / 2.0 * (1.0 + z2 / 12.0 * (1.0 + z2 / 30.0));
  }
  return std::cosh(z);
}

int symmetric_integer_radius_sq(const WavenumberLattice& lattice, std::size_t mode) {
  const int half = lattice.n() / 2;
  int s = 0;
  for (int c : lattice.coords(mode)) {
    const int j = c == half ? 0 : lattice.signed_index(c);
    s += j * j;
  }
  return s;
}

void apply_table(const RadialOperatorTable& table, const WavenumberLattice& lattice,
                 const SpectralState& in, SpectralState& out) {
  for (int c = 0; c < 4; ++c) out.coeffs[c].resize(lattice.size());
  parallel_for(lattice.size(), [&](std::size_t begin, std::size_t end) {
    Complex v[4];
    for (std::size_t m = begin; m < end; ++m) {
      for (int c = 0; c < 4; ++c) v[c] = in.coeffs[c][m];
      table.at(symmetric_integer_radius_sq(lattice, m))
          .apply(lattice.symmetric_wave_vector(m), v);
      for (int c = 0; c < 4; ++c) out.coeffs[c][m] = v[c];
    }
  });
}

}  // namespace detail

EigenPair eigenvalues(double xi_mag, const ViscosityParams& params) {
  const double nu = params.nu();
  const double r2 = xi_mag * xi_mag;
  EigenPair e{};
  if (xi_mag == 0.0) return e;
  const double mean = -0.5 * nu * r2;
  const double q = nu * nu * r2 - 4.0;  // discriminant / r^2
  e.lambda_bar = mean;
  if (q >= 0.0) {
    const double s = xi_mag * std::sqrt(q);
    const double minus = 0.5 * (-nu * r2 - s);
    e.lambda_minus = minus;
    e.lambda_plus = r2 / minus;  // Vieta: product of roots is r^2
    e.delta = 0.5 * s;
  } else {
    const double s = xi_mag * std::sqrt(-q);
    e.lambda_plus = Complex(mean, 0.5 * s);
    e.lambda_minus = Complex(mean, -0.5 * s);
    e.delta = Complex(0.0, 0.5 * s);
  }
  return e;
}

SymbolCoefficients stable_entries(double t, const EigenPair& eig) {
  if (t < 0.0) throw DomainError("stable_entries: negative time");
  const Complex z = eig.delta * t;
  const Complex mean = eig.lambda_bar;
  if (std::abs(z.real()) <= 20.0) {
    // e^{l_bar t} (cosh(dt) -/+ l_bar t sinhc(dt)) and e^{l_bar t} t sinhc(dt)
    const Complex e = std::exp(mean * t);
    const Complex shc = t * detail::sinhc(z);
    const Complex ch = detail::cosh_stable(z);
    return {e * shc, e * (ch - mean * shc), e * (ch + mean * shc)};
  }
  // Real, well separated roots: plain divided differences, no cancellation.
  const Complex lp = eig.lambda_plus;
  const Complex lm = eig.lambda_minus;
  const Complex ep = std::exp(lp * t);
  const Complex em = std::exp(lm * t);
  const Complex gap = 2.0 * eig.delta;
  return {(ep - em) / gap, (lp * em - lm * ep) / gap, (lp * ep - lm * em) / gap};
}

SymbolCoefficients stable_entries(double t, double xi_mag, const ViscosityParams& params) {
  return stable_entries(t, eigenvalues(xi_mag, params));
}

const char* to_string(SymbolPart part) {
  switch (part) {
    case SymbolPart::Full: return "Full";
    case SymbolPart::Low: return "Low";
    case SymbolPart::HighRegular: return "HighRegular";
    case SymbolPart::HighSingular: return "HighSingular";
  }
  return "?";
}

SymbolPart parse_symbol_part(const std::string& text) {
  if (text == "Full" || text == "F") return SymbolPart::Full;
  if (text == "Low" || text == "L") return SymbolPart::Low;
  if (text == "HighRegular" || text == "HR") return SymbolPart::HighRegular;
  if (text == "HighSingular" || text == "HS") return SymbolPart::HighSingular;
  throw ConfigurationError("unknown symbol part '" + text + "'");
}

Matrix4c ModeOperator::to_matrix(const Vec3& xi) const {
  Matrix4c out = Matrix4c::Zero();
  const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
  out(0, 0) = rho_rho;
  for (int i = 0; i < 3; ++i) {
    out(0, 1 + i) = coupling * xi[i];
    out(1 + i, 0) = coupling * xi[i];
    for (int j = 0; j < 3; ++j) {
      Complex v = i == j ? transverse : Complex{};
      if (r2 > 0.0) v += (longitudinal - transverse) * (xi[i] * xi[j] / r2);
      out(1 + i, 1 + j) = v;
    }
  }
  return out;
}

void ModeOperator::apply(const Vec3& xi, Complex* v) const {
  const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
  const Complex rho = v[0];
  const Complex dot = xi[0] * v[1] + xi[1] * v[2] + xi[2] * v[3];
  const Complex along = r2 > 0.0 ? (longitudinal - transverse) * dot / r2 : Complex{};
  v[0] = rho_rho * rho + coupling * dot;
  for (int i = 0; i < 3; ++i) v[1 + i] = coupling * xi[i] * rho + transverse * v[1 + i] + along * xi[i];
}

double cutoff_chi(double xi_mag) {
  if (xi_mag <= 0.5) return 1.0;
  if (xi_mag > 1.0) return 0.0;
  const auto f = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
  const double a = f(1.0 - xi_mag);
  const double b = f(xi_mag - 0.5);
  return a / (a + b);
}

namespace {

Complex singular_coefficient(double t, const EigenPair& eig, double chi) {
  if (chi >= 1.0) return {};
  if (std::abs(eig.delta) <= kConfluenceTolerance * std::abs(eig.lambda_bar)) return {};
  return (1.0 - chi) * (-eig.lambda_minus) * std::exp(eig.lambda_plus * t) / (2.0 * eig.delta);
}

// Coefficients that are real for real xi are stripped of rounding noise in
// the imaginary part so the operator commutes with conjugation exactly.
Complex real_part(Complex z) { return {z.real(), 0.0}; }

}  // namespace

Complex singular_coefficient(double t, double xi_mag, const ViscosityParams& params) {
  if (t < 0.0) throw DomainError("singular_coefficient: negative time");
  return singular_coefficient(t, eigenvalues(xi_mag, params), cutoff_chi(xi_mag));
}

ModeOperator mode_operator(double t, double xi_mag, const ViscosityParams& params,
                           SymbolPart part) {
  if (t < 0.0) throw DomainError("symbol: negative time t = " + std::to_string(t));
  const EigenPair eig = eigenvalues(xi_mag, params);
  const SymbolCoefficients c = stable_entries(t, eig);
  ModeOperator full;
  full.rho_rho = real_part(c.g_minus);
  full.coupling = Complex(0.0, -c.m.real());
  full.transverse = std::exp(-params.mu() * xi_mag * xi_mag * t);
  full.longitudinal = real_part(c.g_plus);
  if (xi_mag == 0.0) full = ModeOperator{};
  if (part == SymbolPart::Full) return full;

  const double chi = cutoff_chi(xi_mag);
  const auto scaled = [&](double s) {
    ModeOperator op = full;
    op.rho_rho *= s;
    op.coupling *= s;
    op.transverse *= s;
    op.longitudinal *= s;
    return op;
  };
  if (part == SymbolPart::Low) return scaled(chi);

  const Complex singular = singular_coefficient(t, eig, chi);
  if (part == SymbolPart::HighSingular) {
    ModeOperator op{Complex{}, Complex{}, Complex{}, Complex{}};
    op.rho_rho = singular;
    return op;
  }
  ModeOperator op = scaled(1.0 - chi);
  op.rho_rho -= singular;
  return op;
}

PropagatorMatrix symbol(double t, const Vec3& xi, const ViscosityParams& params) {
  const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
  return {mode_operator(t, r, params, SymbolPart::Full).to_matrix(xi), t, xi, SymbolPart::Full};
}

SymbolParts symbol_parts(double t, const Vec3& xi, const ViscosityParams& params) {
  const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
  const auto make = [&](SymbolPart part) {
    return PropagatorMatrix{mode_operator(t, r, params, part).to_matrix(xi), t, xi, part};
  };
  return {make(SymbolPart::Low), make(SymbolPart::HighRegular), make(SymbolPart::HighSingular)};
}

Matrix4c generator_symbol(const Vec3& xi, const ViscosityParams& params) {
  const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
  const double cross = params.mu() + params.lambda_bulk();
  Matrix4c l = Matrix4c::Zero();
  for (int i = 0; i < 3; ++i) {
    l(0, 1 + i) = Complex(0.0, xi[i]);
    l(1 + i, 0) = Complex(0.0, xi[i]);
    for (int j = 0; j < 3; ++j)
      l(1 + i, 1 + j) = (i == j ? params.mu() * r2 : 0.0) + cross * xi[i] * xi[j];
  }
  return l;
}

Matrix4c matrix_exponential(const Matrix4c& a) {
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Matrix4c b = a * std::ldexp(1.0, -squarings);
  Matrix4c sum = Matrix4c::Identity();
  Matrix4c term = Matrix4c::Identity();
  for (int k = 1; k <= 18; ++k) {
    term = (term * b) / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

Matrix4c expm_oracle(double t, const Vec3& xi, const ViscosityParams& params) {
  if (t < 0.0) throw DomainError("expm_oracle: negative time");
  return matrix_exponential(-t * generator_symbol(xi, params));
}

SpectralState apply_propagator(const SpectralState& state, double t,
                               const ViscosityParams& params, SymbolPart part,
                               const WavenumberLattice& lattice) {
  if (t < 0.0) throw DomainError("apply_propagator: negative time");
  for (const auto& c : state.coeffs)
    if (c.size() != lattice.size()) throw ShapeError("apply_propagator: state does not match lattice");
  const detail::RadialOperatorTable table(
      lattice, [&](double r) { return mode_operator(t, r, params, part); });
  SpectralState out;
  detail::apply_table(table, lattice, state, out);
  return out;
}

double operator_norm(const Matrix4c& a) {
  Eigen::JacobiSVD<Matrix4c> svd(a);
  return svd.singularValues()(0);
}

}  // namespace greenprop
