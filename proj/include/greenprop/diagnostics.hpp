#pragma once

// Norm bundles along runs, the a priori threshold monitor and decay reports.

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "greenprop/kernel_analysis.hpp"
#include "greenprop/spectral_core.hpp"

namespace greenprop {

/// Exponents carried by a bundle, in storage order.
inline constexpr std::array<const char*, 4> kBundleExponents = {"4/3", "2", "4", "inf"};

struct NormBundle {
  double t = 0.0;
  /// ||grad^k V||_2 for k = 0, 1, 2 (radial multiplier).
  std::array<double, 3> sobolev{};
  /// lp[i][k]: ||grad^k V||_{L^p} with p = kBundleExponents[i], k = 0, 1;
  /// physical-space magnitudes over all components.
  std::array<std::array<double, 2>, 4> lp{};

  double linf() const { return lp[3][0]; }
  double grad_linf() const { return lp[3][1]; }
};

/// Index into NormBundle::lp for "4/3", "2", "4", "inf"; throws ConfigurationError otherwise.
int bundle_exponent_index(const std::string& p);

NormBundle sample_norms(const SpectralState& state, const WavenumberLattice& lattice, double t);

struct AprioriStatus {
  bool ok = true;
  std::string bound;  ///< "uniform" or "gradient" when violated
  double t = 0.0;
  double margin = 0.0;  ///< value - threshold of the failing bound
};

/// OK iff ||V||_inf <= 1/2 (1+t)^{-3/2} and ||grad V||_inf <= eta (1+t)^{-2}.
AprioriStatus check_apriori(double linf, double grad_linf, double eta, double t);
AprioriStatus check_apriori(const NormBundle& bundle, double eta);

struct DecayRow {
  std::string quantity;
  std::string p;
  int k = 0;
  DecayFit fit;
  std::string note;
};

struct DecayReport {
  std::vector<DecayRow> rows;
  bool all_pass() const;
};

struct ReportOptions {
  std::array<double, 2> window{5.0, 500.0};
  double tolerance = 0.1;
  double l43_tolerance = 0.1;
  /// Nonlinear box runs check L^2 rows one-sided.
  bool one_sided = false;
};

/// Series of one bundle quantity: quantity "sobolev" (p = "2") or "lp".
NormSeries bundle_series(const std::vector<NormBundle>& samples, const std::string& p, int k,
                         bool sobolev);

/// Rows: ||grad^k V||_2 (k = 0..2), ||grad^k V||_p (p = 2, 4, inf; k = 0, 1),
/// ||V||_{4/3} (always one-sided against 7/40).
DecayReport build_decay_report(const std::vector<NormBundle>& samples, const ReportOptions& options);

/// quantity,p,k,window_lo,window_hi,fitted,theory,r2,pass
void write_decay_csv(std::ostream& out, const DecayReport& report);

/// Torus-capped window upper end min(80, 0.3 (L / 2 pi)^2 2 / nu).
double torus_window_cap(double box_length, double nu);

}  // namespace greenprop
