#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "greenprop/diagnostics.hpp"
#include "greenprop/errors.hpp"
#include "greenprop/kernel_analysis.hpp"
#include "test_support.hpp"

using namespace greenprop;

namespace {

NormSeries series_of(const std::vector<double>& times, double (*f)(double)) {
  NormSeries s;
  s.times = times;
  for (double t : times) s.values.push_back(f(t));
  return s;
}

std::vector<double> every(double lo, double hi, double step) {
  std::vector<double> out;
  for (double t = lo; t <= hi + 1e-9; t += step) out.push_back(t);
  return out;
}

}  // namespace

TEST_CASE("fit_decay") {
  const auto times = every(5.0, 500.0, 5.0);
  SUBCASE("exact algebraic series") {
    const auto fit = fit_decay(series_of(times, [](double t) { return std::pow(1.0 + t, -1.5); }),
                               DecayModel::Algebraic, {5, 500}, 1.5, 0.1);
    CHECK(std::abs(fit.fitted_rate - 1.5) <= 1e-10);
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.pass);
    CHECK(fit.samples == 100);
  }
  SUBCASE("exact exponential series") {
    const auto fit = fit_decay(series_of(times, [](double t) { return 3.0 * std::exp(-0.4 * t); }),
                               DecayModel::Exponential, {5, 60}, 0.4, 0.01);
    CHECK(std::abs(fit.fitted_rate - 0.4) <= 1e-10);
    CHECK(fit.pass);
  }
  SUBCASE("one-sided acceptance") {
    const auto s = series_of(times, [](double t) { return std::pow(1.0 + t, -2.0); });
    CHECK(fit_decay(s, DecayModel::Algebraic, {5, 500}, 0.75, 0.25, true).pass);
    CHECK_FALSE(fit_decay(s, DecayModel::Algebraic, {5, 500}, 0.75, 0.25, false).pass);
  }
  SUBCASE("errors") {
    auto s = series_of(times, [](double t) { return 1.0 / t; });
    s.values[10] = 0.0;
    CHECK_THROWS_AS(fit_decay(s, DecayModel::Algebraic, {5, 500}, 1.0, 0.1), DomainError);
    const auto few = series_of(every(1, 7, 1), [](double t) { return 1.0 / t; });
    CHECK_THROWS_AS(fit_decay(few, DecayModel::Algebraic, {0, 10}, 1.0, 0.1), ConfigurationError);
    NormSeries unordered = series_of(every(1, 20, 1), [](double t) { return 1.0 / t; });
    std::swap(unordered.times[2], unordered.times[3]);
    CHECK_THROWS_AS(unordered.validate(), DomainError);
  }
  SUBCASE("poor fits fail on r^2") {
    // algebraic to exponential crossover
    const auto s = series_of(times, [](double t) { return std::pow(1.0 + t, -0.75) * std::exp(-t / 100.0); });
    const auto fit = fit_decay(s, DecayModel::Algebraic, {5, 500}, 0.75, 10.0);
    CHECK(fit.r_squared < kMinRSquared);
    CHECK_FALSE(fit.pass);
  }
}

TEST_CASE("radial quadrature") {
  const ViscosityParams p(1.0, 0.0, 1.0, 1.4);
  const auto times = every(5.0, 500.0, 5.0);
  SUBCASE("Low part rates") {
    for (int k = 0; k < 3; ++k) {
      NormSeries l2, l1;
      l2.times = l1.times = times;
      for (double t : times) {
        l2.values.push_back(symbol_norm_radial(t, SymbolPart::Low, k, RadialMode::L2Kernel, p));
        l1.values.push_back(symbol_norm_radial(t, SymbolPart::Low, k, RadialMode::L1Symbol, p));
      }
      const auto f2 = fit_decay(l2, DecayModel::Algebraic, {5, 500}, 0.75 + 0.5 * k, 0.1);
      const auto f1 = fit_decay(l1, DecayModel::Algebraic, {5, 500}, 1.5 + 0.5 * k, 0.1);
      MESSAGE("k = " << k << ": L2 " << f2.fitted_rate << ", L1 symbol " << f1.fitted_rate);
      CHECK(f2.pass);
      CHECK(f1.pass);
      for (std::size_t i = 1; i < times.size(); ++i) {
        CHECK(l2.values[i] <= l2.values[i - 1]);
        CHECK(l1.values[i] <= l1.values[i - 1]);
      }
    }
  }
  SUBCASE("halving the tolerance barely moves the result") {
    for (double t : {1.0, 20.0, 300.0})
      for (auto mode : {RadialMode::L2Kernel, RadialMode::L1Symbol})
        for (int k = 0; k < 3; ++k) {
          const double a = symbol_norm_radial(t, SymbolPart::Low, k, mode, p, {1e-8, {}});
          const double b = symbol_norm_radial(t, SymbolPart::Low, k, mode, p, {5e-9, {}});
          CHECK(std::abs(a - b) <= 1e-6 * std::abs(b));
        }
  }
  SUBCASE("radial_integral on a Gaussian moment") {
    const double t = 3.0;
    const double v = radial_integral([&](double r) { return r * r * std::exp(-2.0 * t * r * r); },
                                     20.0, 1e-10);
    CHECK(v == doctest::Approx(std::sqrt(kPi) / (4.0 * std::pow(2.0 * t, 1.5))).epsilon(1e-9));
    CHECK_THROWS_AS(radial_integral([](double) { return 1.0; }, std::numeric_limits<double>::infinity(), 1e-8),
                    ConfigurationError);
  }
  SUBCASE("HighRegular and Full need a cutoff") {
    CHECK_THROWS_AS(symbol_norm_radial(1.0, SymbolPart::HighRegular, 0, RadialMode::L2Kernel, p),
                    NumericalError);
    CHECK_THROWS_AS(symbol_norm_radial(1.0, SymbolPart::HighSingular, 0, RadialMode::L2Kernel, p),
                    ConfigurationError);
  }
  SUBCASE("HighRegular decays exponentially") {
    // nu = 5 puts the confluent radius 2 / nu where the cutoff is still 1; for
    // nu < 4 the high parts carry the divided-difference pole of the confluence
    const ViscosityParams q(1.0, 3.0, 1.0, 1.4);
    const auto ts = every(1.0, 30.0, 1.0);
    for (int k = 0; k < 2; ++k) {
      NormSeries sup, l2;
      sup.times = l2.times = ts;
      for (double t : ts) {
        sup.values.push_back(symbol_sup_norm(t, SymbolPart::HighRegular, k, q, 50.0));
        l2.values.push_back(symbol_norm_radial(t, SymbolPart::HighRegular, k, RadialMode::L2Kernel, q,
                                               {1e-8, 50.0}));
      }
      const auto fs = fit_decay(sup, DecayModel::Exponential, {1, 30}, 0.0, 1e9);
      const auto fl = fit_decay(l2, DecayModel::Exponential, {1, 30}, 0.0, 1e9);
      MESSAGE("HR k = " << k << ": sup rate " << fs.fitted_rate << " r2 " << fs.r_squared << ", L2 rate "
                        << fl.fitted_rate << " r2 " << fl.r_squared);
      CHECK(fs.fitted_rate > 0.0);
      CHECK(fs.r_squared >= kMinRSquared);
      CHECK(fl.fitted_rate > 0.0);
      CHECK(fl.r_squared >= kMinRSquared);
    }
  }
}

TEST_CASE("kernel_on_box") {
  const ViscosityParams p(1.0, 0.0, 1.0, 1.4);
  SUBCASE("preconditions name the failing inequality") {
    const auto small = build_lattice(32, 10.0);
    try {
      kernel_on_box(2.0, SymbolPart::Low, small, p);
      FAIL("expected ConfigurationError");
    } catch (const ConfigurationError& e) {
      CHECK(std::string(e.what()).find("20") != std::string::npos);
    }
    const auto coarse = build_lattice(16, 40.0);
    try {
      kernel_on_box(2.0, SymbolPart::Low, coarse, p);
      FAIL("expected ConfigurationError");
    } catch (const ConfigurationError& e) {
      CHECK(std::string(e.what()).find("pi") != std::string::npos);
    }
    CHECK_THROWS_AS(kernel_on_box(0.0, SymbolPart::Low, build_lattice(64, 40.0), p), DomainError);
  }
  SUBCASE("L2 agrees with the radial pipeline") {
    const auto lat = build_lattice(64, 40.0);
    for (int k = 0; k < 3; ++k) {
      const BoxKernel box = kernel_on_box(2.0, SymbolPart::Low, lat, p, k);
      const double radial = symbol_norm_radial(2.0, SymbolPart::Low, k, RadialMode::L2Kernel, p);
      MESSAGE("k = " << k << ": box " << box.norms[2] << " radial " << radial << " quality "
                     << box.truncation_quality);
      CHECK(box.truncation_quality >= 0.999);
      CHECK(std::abs(box.norms[2] - radial) <= 0.02 * radial);
      CHECK(box.norms[3] <= symbol_norm_radial(2.0, SymbolPart::Low, k, RadialMode::L1Symbol, p) * 1.02);
    }
  }
  SUBCASE("components are real and symmetric under x -> -x") {
    const auto lat = build_lattice(64, 40.0);
    const BoxKernel box = kernel_on_box(1.0, SymbolPart::Low, lat, p, 0, true);
    REQUIRE(box.components.size() == 16);
    // rho-rho entry is even, rho-u entries are odd
    const auto& rr = box.components[0];
    const auto& ru = box.components[1];
    double even = 0.0, odd = 0.0;
    for (std::size_t m = 0; m < lat.size(); ++m) {
      const auto c = lat.coords(m);
      const std::size_t mm = lat.index((lat.n() - c[0]) % lat.n(), (lat.n() - c[1]) % lat.n(),
                                       (lat.n() - c[2]) % lat.n());
      even = std::max(even, std::abs(rr[m] - rr[mm]));
      odd = std::max(odd, std::abs(ru[m] + ru[mm]));
    }
    CHECK(even <= 1e-12 * greenprop::testing::max_abs(rr));
    CHECK(odd <= 1e-12 * greenprop::testing::max_abs(rr));
  }
}

// The L^1 norm of the low-frequency kernel keeps growing over the torus window
// (the sound-wave shell spreads faster than its amplitude falls), so the
// bounded-L^1 example is recorded but cannot pass.
TEST_CASE("kernel_on_box L1 of the low part stays bounded" * doctest::may_fail()) {
  const ViscosityParams p(0.1, 0.0, 1.0, 1.4);
  const auto lat = build_lattice(128, 80.0);
  const double cap = torus_window_cap(lat.box_length(), p.nu());
  NormSeries l1;
  for (double t : log_spaced(5.0, cap, 8)) {
    const BoxKernel box = kernel_on_box(t, SymbolPart::Low, lat, p);
    l1.times.push_back(t);
    l1.values.push_back(box.norms[0]);
  }
  const auto fit = fit_decay(l1, DecayModel::Algebraic, {5.0, cap}, 0.0, 0.15);
  MESSAGE("L1 fitted rate " << fit.fitted_rate << " r2 " << fit.r_squared);
  CHECK(fit.pass);
}

TEST_CASE("high-frequency singular part as an operator") {
  const ViscosityParams p(1.0, 3.0, 1.0, 1.4);
  const auto lat = build_lattice(32, 2.0 * kPi);
  std::mt19937_64 rng(41);
  const auto times = every(0.5, 10.0, 0.5);
  NormSeries worst;
  worst.times = times;
  worst.values.assign(times.size(), 0.0);
  for (int f = 0; f < 5; ++f) {
    const SpectralState field = greenprop::testing::random_band_state(lat, 15, rng);
    const auto ratios = singular_operator_ratios(field, times, p, lat);
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK(ratios[i] <= singular_lattice_sup(times[i], p, lat) * (1.0 + 1e-12));
      worst.values[i] = std::max(worst.values[i], ratios[i]);
    }
  }
  const auto fit = fit_decay(worst, DecayModel::Exponential, {0.5, 10.0}, 1.0 / p.nu(), 0.2 / p.nu());
  MESSAGE("HS rate " << fit.fitted_rate << " vs " << 1.0 / p.nu());
  CHECK(fit.pass);
}

TEST_CASE("kernel csv") {
  std::ostringstream out;
  write_kernel_csv(out, {{"Low k=0 L2", 5.0, 0.125, "radial", 1.0}});
  CHECK(out.str() == "label,t,value,pipeline,truncation_quality\nLow k=0 L2,5,0.125,radial,1\n");
  const auto ls = log_spaced(1.0, 100.0, 3);
  CHECK(ls[1] == doctest::Approx(10.0));
  CHECK_THROWS_AS(log_spaced(0.0, 1.0, 3), ConfigurationError);
}
