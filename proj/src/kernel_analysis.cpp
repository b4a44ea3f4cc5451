#include "greenprop/kernel_analysis.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "greenprop/csv.hpp"
#include "greenprop/errors.hpp"

namespace greenprop {

void NormSeries::validate() const {
  if (times.size() != values.size())
    throw DomainError("norm series '" + label + "': times and values differ in length");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && !(times[i] > times[i - 1]))
      throw DomainError("norm series '" + label + "': times not strictly increasing");
    if (!std::isfinite(values[i]) || values[i] < 0.0)
      throw DomainError("norm series '" + label + "': value must be finite and non-negative");
  }
}

const char* to_string(DecayModel model) {
  return model == DecayModel::Algebraic ? "algebraic" : "exponential";
}

DecayFit fit_decay(const NormSeries& series, DecayModel model, std::array<double, 2> window,
                   double theory_rate, double tolerance, bool one_sided) {
  series.validate();
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double t = series.times[i];
    if (t < window[0] || t > window[1]) continue;
    if (!(series.values[i] > 0.0))
      throw DomainError("fit_decay: non-positive value at t = " + std::to_string(t) + " in '" +
                        series.label + "'");
    xs.push_back(model == DecayModel::Algebraic ? std::log1p(t) : t);
    ys.push_back(std::log(series.values[i]));
  }
  if (xs.size() < 8)
    throw ConfigurationError("fit_decay: window [" + std::to_string(window[0]) + ", " +
                             std::to_string(window[1]) + "] holds " + std::to_string(xs.size()) +
                             " samples, need at least 8");
  const double count = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (my + slope * (xs[i] - mx));
    ss_res += e * e;
  }
  DecayFit fit;
  fit.model = model;
  fit.fitted_rate = -slope;
  fit.window = window;
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.theory_rate = theory_rate;
  fit.tolerance = tolerance;
  fit.one_sided = one_sided;
  fit.samples = static_cast<int>(xs.size());
  const bool rate_ok = one_sided ? fit.fitted_rate >= theory_rate - tolerance
                                 : std::abs(fit.fitted_rate - theory_rate) <= tolerance;
  fit.pass = rate_ok && fit.r_squared >= kMinRSquared;
  return fit;
}

double symbol_frobenius_sq(double t, double r, const ViscosityParams& params, SymbolPart part) {
  const ModeOperator op = mode_operator(t, r, params, part);
  return std::norm(op.rho_rho) + 2.0 * r * r * std::norm(op.coupling) +
         2.0 * std::norm(op.transverse) + std::norm(op.longitudinal);
}

double radial_integral(const std::function<double(double)>& f, double upper, double rel_tol) {
  if (!std::isfinite(upper)) throw ConfigurationError("radial_integral: upper limit must be finite");
  if (!(upper > 0.0)) return 0.0;
  constexpr int kScan = 4000;
  constexpr double kSpan = 1e-7;
  std::vector<double> rs(kScan), fs(kScan);
  double peak = 0.0;
  for (int i = 0; i < kScan; ++i) {
    rs[i] = upper * std::pow(kSpan, 1.0 - static_cast<double>(i) / (kScan - 1));
    fs[i] = std::abs(f(rs[i]));
    peak = std::max(peak, fs[i]);
  }
  if (peak == 0.0) return 0.0;
  int last = kScan - 1;
  while (last > 0 && fs[last] < 1e-16 * peak) --last;
  const double top = rs[std::min(last + 1, kScan - 1)];

  std::vector<double> breaks{0.0};
  constexpr int kPieces = 48;
  for (int i = 0; i < kPieces; ++i) {
    const double b = top * std::pow(kSpan, 1.0 - static_cast<double>(i) / kPieces);
    if (b < top) breaks.push_back(b);
  }
  breaks.push_back(top);

  // One Kronrod pass per piece, then refine only pieces whose error matters
  // against the whole integral; tiny pieces near r = 0 carry rounding noise
  // that no per-piece relative tolerance can beat.
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const std::size_t pieces = breaks.size() - 1;
  std::vector<double> values(pieces), errors(pieces), l1(pieces);
  double rough = 0.0;
  for (std::size_t i = 0; i < pieces; ++i) {
    values[i] = GK::integrate(f, breaks[i], breaks[i + 1], 0, 0.0, &errors[i], &l1[i]);
    rough += values[i];
  }
  const double budget = rel_tol * std::abs(rough) / static_cast<double>(pieces);
  double total = 0.0;
  double err_total = 0.0;
  for (std::size_t i = 0; i < pieces; ++i) {
    if (errors[i] > budget && l1[i] > 0.0) {
      const double tol = std::clamp(budget / l1[i], 1e-15, 1.0);
      values[i] = GK::integrate(f, breaks[i], breaks[i + 1], 20, tol, &errors[i]);
    }
    total += values[i];
    err_total += errors[i];
  }
  if (!std::isfinite(total) || err_total > 100.0 * rel_tol * std::abs(total) + 1e-300)
    throw NumericalError("radial quadrature did not converge: estimate " + format_number(total) +
                         ", error " + format_number(err_total) + ", upper " + format_number(top));
  return total;
}

namespace {

double part_upper_limit(SymbolPart part, const RadialOptions& options) {
  if (part == SymbolPart::HighSingular)
    throw ConfigurationError("symbol_norm_radial: part must be Low, HighRegular or Full");
  if (part == SymbolPart::Low)
    return options.frequency_cutoff ? std::min(1.0, *options.frequency_cutoff) : 1.0;
  if (!options.frequency_cutoff)
    throw NumericalError(std::string("symbol_norm_radial: the ") + to_string(part) +
                         " kernel is not integrable on R^3; set a frequency cutoff");
  return *options.frequency_cutoff;
}

constexpr double kInvTwoPiCubed = 1.0 / (8.0 * kPi * kPi * kPi);

}  // namespace

double symbol_norm_radial(double t, SymbolPart part, int k, RadialMode mode,
                          const ViscosityParams& params, const RadialOptions& options) {
  if (!(t > 0.0)) throw DomainError("symbol_norm_radial: t must be positive");
  if (k < 0 || k > 2) throw UnsupportedOrderError("symbol_norm_radial: k must lie in [0, 2]");
  const double upper = part_upper_limit(part, options);
  if (mode == RadialMode::L2Kernel) {
    const auto f = [&](double r) {
      return 4.0 * kPi * r * r * std::pow(r, 2 * k) * symbol_frobenius_sq(t, r, params, part) *
             kInvTwoPiCubed;
    };
    return std::sqrt(radial_integral(f, upper, options.rel_tol));
  }
  const auto f = [&](double r) {
    return 4.0 * kPi * r * r * std::pow(r, k) * std::sqrt(symbol_frobenius_sq(t, r, params, part)) *
           kInvTwoPiCubed;
  };
  return radial_integral(f, upper, options.rel_tol);
}

double symbol_sup_norm(double t, SymbolPart part, int k, const ViscosityParams& params,
                       double r_max) {
  if (!(r_max > 0.0)) throw ConfigurationError("symbol_sup_norm: r_max must be positive");
  const auto g = [&](double r) { return std::pow(r, k) * std::sqrt(symbol_frobenius_sq(t, r, params, part)); };
  constexpr int kGrid = 20000;
  double best = g(0.0);
  int best_i = 0;
  for (int i = 1; i <= kGrid; ++i) {
    const double v = g(r_max * i / kGrid);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  // golden-section refinement in the neighbouring cells
  double a = r_max * std::max(best_i - 1, 0) / kGrid;
  double b = r_max * std::min(best_i + 1, kGrid) / kGrid;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double c = b - phi * (b - a);
    const double d = a + phi * (b - a);
    if (g(c) > g(d)) b = d;
    else a = c;
  }
  return std::max(best, g(0.5 * (a + b)));
}

BoxKernel kernel_on_box(double t, SymbolPart part, const WavenumberLattice& lattice,
                        const ViscosityParams& params, int k, bool keep_components) {
  if (!(t > 0.0)) throw DomainError("kernel_on_box: t must be positive");
  if (k < 0 || k > 2) throw UnsupportedOrderError("kernel_on_box: k must lie in [0, 2]");
  const double L = lattice.box_length();
  const double decay_scale = 20.0 * std::sqrt(params.nu() * t);
  if (L < decay_scale)
    throw ConfigurationError("kernel_on_box: box length L = " + format_number(L) +
                             " violates L >= 20 sqrt(nu t) = " + format_number(decay_scale));
  const double nyquist = lattice.n() * kPi / L;
  if (nyquist < 4.0)
    throw ConfigurationError("kernel_on_box: n pi / L = " + format_number(nyquist) +
                             " violates n pi / L >= 4");

  const detail::RadialOperatorTable table(lattice, [&](double r) {
    ModeOperator op = mode_operator(t, r, params, part);
    const double w = std::pow(r, k);
    op.rho_rho *= w;
    op.coupling *= w;
    op.transverse *= w;
    op.longitudinal *= w;
    return op;
  });

  const std::size_t size = lattice.size();
  const double inv_volume = 1.0 / lattice.volume();
  RealField magnitude_sq(size, 0.0);
  BoxKernel out;
  if (keep_components) out.components.assign(16, RealField{});
  // The symmetric radius of a Nyquist mode is not its true radius, so those
  // planes are left empty rather than sampled at the wrong frequency.
  std::vector<char> on_nyquist(size, 0);
  for (std::size_t m = 0; m < size; ++m)
    for (int c : lattice.coords(m)) on_nyquist[m] = on_nyquist[m] || c == lattice.n() / 2;
  ComplexField entry(size);
  for (int a = 0; a < 4; ++a) {
    for (int b = a; b < 4; ++b) {
      for (std::size_t m = 0; m < size; ++m) {
        if (on_nyquist[m]) {
          entry[m] = 0.0;
          continue;
        }
        const Vec3 xi = lattice.symmetric_wave_vector(m);
        const ModeOperator& op = table.at(detail::symmetric_integer_radius_sq(lattice, m));
        const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        Complex v;
        if (a == 0 && b == 0) {
          v = op.rho_rho;
        } else if (a == 0) {
          v = op.coupling * xi[b - 1];
        } else {
          const int i = a - 1, j = b - 1;
          v = i == j ? op.transverse : Complex{};
          if (r2 > 0.0) v += (op.longitudinal - op.transverse) * (xi[i] * xi[j] / r2);
        }
        entry[m] = v * inv_volume;
      }
      RealField field = to_physical(entry, lattice);
      const double weight = a == b ? 1.0 : 2.0;
      for (std::size_t m = 0; m < size; ++m) magnitude_sq[m] += weight * field[m] * field[m];
      if (keep_components) {
        out.components[4 * a + b] = field;
        if (a != b) out.components[4 * b + a] = std::move(field);
      }
    }
  }
  for (double& v : magnitude_sq) v = std::sqrt(v);
  const std::array<LpExponent, 4> ps = {LpExponent::finite(1.0), LpExponent::finite(4.0 / 3.0),
                                        LpExponent::finite(2.0), LpExponent::infinity()};
  for (int i = 0; i < 4; ++i) out.norms[i] = lp_norm(magnitude_sq, ps[i], lattice);

  if (part == SymbolPart::Low) {
    const auto mass = [&](double r) {
      return r * r * std::pow(r, k) * std::sqrt(symbol_frobenius_sq(t, r, params, part));
    };
    const double total = radial_integral(mass, 1.0, 1e-8);
    const double inside = nyquist >= 1.0 ? total : radial_integral(mass, nyquist, 1e-8);
    out.truncation_quality = total > 0.0 ? inside / total : 1.0;
  }
  return out;
}

double gaussian_linear_norm(double t, int k, RadialMode mode, const ViscosityParams& params,
                            const GaussianData& data, double rel_tol) {
  if (t < 0.0) throw DomainError("gaussian_linear_norm: negative time");
  if (k < 0 || k > 2) throw UnsupportedOrderError("gaussian_linear_norm: k must lie in [0, 2]");
  const Vec3& d = data.direction;
  if (std::abs(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - 1.0) > 1e-12)
    throw ConfigurationError("gaussian_linear_norm: direction must be a unit vector");
  const double s = data.sigma;
  const double amp0 = data.eps * std::pow(kPi, 1.5) * s * s * s;
  const double mu = params.mu();
  // |V_hat|^2 = A^2 (a + b c^2), c = cos(angle(xi, d))
  const auto coefficients = [&](double r, double& a, double& b) {
    const SymbolCoefficients c = stable_entries(t, r, params);
    const double gm = c.g_minus.real(), gp = c.g_plus.real(), m = c.m.real();
    const double heat = std::exp(-2.0 * mu * r * r * t);
    a = gm * gm + m * m * r * r + heat;
    b = m * m * r * r + gp * gp - heat;
  };
  const double upper = 40.0 / s;
  if (mode == RadialMode::L2Kernel) {
    const auto f = [&](double r) {
      double a, b;
      coefficients(r, a, b);
      const double amp = amp0 * std::exp(-0.25 * s * s * r * r);
      return 4.0 * kPi * r * r * std::pow(r, 2 * k) * amp * amp * (a + b / 3.0) * kInvTwoPiCubed;
    };
    return std::sqrt(radial_integral(f, upper, rel_tol));
  }
  using GL = boost::math::quadrature::gauss<double, 30>;
  const auto f = [&](double r) {
    double a, b;
    coefficients(r, a, b);
    const double amp = amp0 * std::exp(-0.25 * s * s * r * r);
    const double angular = GL::integrate([&](double c) { return std::sqrt(std::max(a + b * c * c, 0.0)); }, -1.0, 1.0);
    return 2.0 * kPi * r * r * std::pow(r, k) * amp * angular * kInvTwoPiCubed;
  };
  return radial_integral(f, upper, rel_tol);
}

std::vector<double> singular_operator_ratios(const SpectralState& f, const std::vector<double>& times,
                                             const ViscosityParams& params,
                                             const WavenumberLattice& lattice) {
  const double base = sobolev_seminorm(f, 0, lattice);
  if (base == 0.0) throw DegenerateInputError("singular_operator_ratios: zero input field");
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times)
    out.push_back(sobolev_seminorm(apply_propagator(f, t, params, SymbolPart::HighSingular, lattice), 0,
                                   lattice) /
                  base);
  return out;
}

double singular_lattice_sup(double t, const ViscosityParams& params, const WavenumberLattice& lattice) {
  // Nyquist components are zeroed, so each axis contributes j^2 with 0 <= j < n/2.
  const int half = lattice.n() / 2;
  std::vector<char> seen(3 * half * half + 1, 0);
  for (int a = 0; a < half; ++a)
    for (int b = a; b < half; ++b)
      for (int c = b; c < half; ++c) seen[a * a + b * b + c * c] = 1;
  double best = 0.0;
  for (std::size_t s = 0; s < seen.size(); ++s)
    if (seen[s])
      best = std::max(best, std::abs(singular_coefficient(t, lattice.unit_wavenumber() * std::sqrt(double(s)), params)));
  return best;
}

void write_kernel_csv(std::ostream& out, const std::vector<KernelRow>& rows) {
  out << "label,t,value,pipeline,truncation_quality\n";
  for (const auto& r : rows)
    out << r.label << ',' << format_number(r.t) << ',' << format_number(r.value) << ',' << r.pipeline
        << ',' << format_number(r.truncation_quality) << '\n';
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (count < 2 || !(lo > 0.0) || !(hi > lo)) throw ConfigurationError("log_spaced: bad range");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace greenprop
