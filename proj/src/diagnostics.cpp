#include "greenprop/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "greenprop/csv.hpp"
#include "greenprop/errors.hpp"

namespace greenprop {

int bundle_exponent_index(const std::string& p) {
  for (int i = 0; i < 4; ++i)
    if (p == kBundleExponents[i]) return i;
  throw ConfigurationError("norm bundle: no exponent '" + p + "'");
}

NormBundle sample_norms(const SpectralState& state, const WavenumberLattice& lattice, double t) {
  NormBundle b;
  b.t = t;
  for (int k = 0; k < 3; ++k) b.sobolev[k] = sobolev_seminorm(state, k, lattice);

  std::array<RealField, 4> values;
  for (int c = 0; c < 4; ++c) values[c] = to_physical(state.coeffs[c], lattice);
  std::array<RealField, 12> grads;
  for (int c = 0; c < 4; ++c)
    for (int j = 0; j < 3; ++j)
      grads[3 * c + j] = to_physical(spectral_derivative(state.coeffs[c], lattice, j, 1), lattice);

  for (int i = 0; i < 4; ++i) {
    const LpExponent p = LpExponent::parse(kBundleExponents[i]);
    b.lp[i][0] = lp_norm(values, p, lattice);
    b.lp[i][1] = lp_norm(grads, p, lattice);
  }
  for (double v : b.sobolev)
    if (!std::isfinite(v)) throw NumericalError("sample_norms: non-finite norm at t = " + format_number(t));
  for (const auto& row : b.lp)
    for (double v : row)
      if (!std::isfinite(v)) throw NumericalError("sample_norms: non-finite norm at t = " + format_number(t));
  return b;
}

AprioriStatus check_apriori(double linf, double grad_linf, double eta, double t) {
  AprioriStatus s;
  s.t = t;
  const double uniform = 0.5 * std::pow(1.0 + t, -1.5);
  const double gradient = eta * std::pow(1.0 + t, -2.0);
  if (linf > uniform) {
    s.ok = false;
    s.bound = "uniform";
    s.margin = linf - uniform;
  } else if (grad_linf > gradient) {
    s.ok = false;
    s.bound = "gradient";
    s.margin = grad_linf - gradient;
  }
  return s;
}

AprioriStatus check_apriori(const NormBundle& bundle, double eta) {
  return check_apriori(bundle.linf(), bundle.grad_linf(), eta, bundle.t);
}

bool DecayReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const DecayRow& r) { return r.fit.pass; });
}

NormSeries bundle_series(const std::vector<NormBundle>& samples, const std::string& p, int k,
                         bool sobolev) {
  NormSeries s;
  if (sobolev) {
    if (k < 0 || k > 2) throw UnsupportedOrderError("bundle_series: sobolev order must lie in [0, 2]");
    s.label = "grad^" + std::to_string(k) + " V in L2 (multiplier)";
  } else {
    if (k < 0 || k > 1) throw UnsupportedOrderError("bundle_series: L^p order must be 0 or 1");
    s.label = "grad^" + std::to_string(k) + " V in L" + p;
  }
  const int pi = sobolev ? 0 : bundle_exponent_index(p);
  for (const auto& b : samples) {
    s.times.push_back(b.t);
    s.values.push_back(sobolev ? b.sobolev[k] : b.lp[pi][k]);
  }
  return s;
}

DecayReport build_decay_report(const std::vector<NormBundle>& samples, const ReportOptions& options) {
  DecayReport report;
  const auto add = [&](const std::string& quantity, const std::string& p, int k, const NormSeries& series,
                       double theory, double tol, bool one_sided) {
    DecayRow row;
    row.quantity = quantity;
    row.p = p;
    row.k = k;
    row.fit = fit_decay(series, DecayModel::Algebraic, options.window, theory, tol, one_sided);
    if (row.fit.r_squared < kMinRSquared) row.note = "r2 below " + format_number(kMinRSquared);
    report.rows.push_back(row);
  };
  for (int k = 0; k < 3; ++k)
    add("sobolev", "2", k, bundle_series(samples, "2", k, true), 0.75 + 0.5 * k, options.tolerance,
        options.one_sided);
  for (const char* p : {"2", "4", "inf"}) {
    const std::string ps = p;
    const double inv_p = ps == "inf" ? 0.0 : 1.0 / std::stod(ps);
    for (int k = 0; k < 2; ++k)
      add("lp", ps, k, bundle_series(samples, ps, k, false), 1.5 * (1.0 - inv_p) + 0.5 * k,
          options.tolerance, options.one_sided);
  }
  add("lp", "4/3", 0, bundle_series(samples, "4/3", 0, false), 7.0 / 40.0, options.l43_tolerance, true);
  return report;
}

void write_decay_csv(std::ostream& out, const DecayReport& report) {
  out << "quantity,p,k,window_lo,window_hi,fitted,theory,r2,pass\n";
  for (const auto& r : report.rows)
    out << r.quantity << ',' << r.p << ',' << r.k << ',' << format_number(r.fit.window[0]) << ','
        << format_number(r.fit.window[1]) << ',' << format_number(r.fit.fitted_rate) << ','
        << format_number(r.fit.theory_rate) << ',' << format_number(r.fit.r_squared) << ','
        << (r.fit.pass ? "true" : "false") << '\n';
}

double torus_window_cap(double box_length, double nu) {
  const double cells = box_length / (2.0 * kPi);
  return std::min(80.0, 0.3 * cells * cells * 2.0 / nu);
}

}  // namespace greenprop
