#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "greenprop/errors.hpp"
#include "greenprop/integrator.hpp"
#include "greenprop/kernel_analysis.hpp"
#include "greenprop/symbol_check.hpp"
#include "test_support.hpp"

using namespace greenprop;

namespace {

double max_entry(const Matrix4c& m) { return m.cwiseAbs().maxCoeff(); }

// int_0^1 e^{-(1 - theta) dt L} theta^{order - 1} d theta by 64-point Gauss
Matrix4c phi_quadrature(int order, double dt, const Vec3& xi, const ViscosityParams& p) {
  Matrix4c sum = Matrix4c::Zero();
  const auto& x = boost::math::quadrature::gauss<double, 64>::abscissa();
  const auto& w = boost::math::quadrature::gauss<double, 64>::weights();
  const auto add = [&](double node, double weight) {
    const double theta = 0.5 * (node + 1.0);
    sum += 0.5 * weight * std::pow(theta, order - 1) * expm_oracle(dt * (1.0 - theta), xi, p);
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    add(x[i], w[i]);
    if (x[i] != 0.0) add(-x[i], w[i]);
  }
  return sum;
}

}  // namespace

TEST_CASE("phi functions") {
  const ViscosityParams p(0.8, 0.4, 1.1, 1.4);
  SUBCASE("identity at xi = 0") {
    CHECK(max_entry(phi1_matrix(0.3, {0, 0, 0}, p) - Matrix4c::Identity()) == 0.0);
    CHECK(max_entry(phi2_matrix(0.3, {0, 0, 0}, p) - 0.5 * Matrix4c::Identity()) == 0.0);
  }
  SUBCASE("defining identity and quadrature oracle on random samples") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_identity = 0.0, worst_phi1 = 0.0, worst_phi2 = 0.0;
    for (int i = 0; i < 300; ++i) {
      const ViscosityParams q = random_params(rng);
      const double dt = 0.5 * unit(rng);
      // radii spread over six decades so both branches are exercised
      const double r = std::pow(10.0, -4.0 + 5.0 * unit(rng));
      const Vec3 xi{r * 0.6, -r * 0.48, r * 0.64};
      const Matrix4c phi1 = phi1_matrix(dt, xi, q);
      const Matrix4c e = expm_oracle(dt, xi, q);
      const Matrix4c lhs = dt * generator_symbol(xi, q) * phi1 + e;
      worst_identity = std::max(worst_identity, max_entry(lhs - Matrix4c::Identity()));
      worst_phi1 = std::max(worst_phi1, max_entry(phi1 - phi_quadrature(1, dt, xi, q)));
      worst_phi2 = std::max(worst_phi2, max_entry(phi2_matrix(dt, xi, q) - phi_quadrature(2, dt, xi, q)));
    }
    CHECK(worst_identity <= 1e-10);
    CHECK(worst_phi1 <= 1e-8);
    CHECK(worst_phi2 <= 1e-8);
  }
  SUBCASE("continuous across the Taylor threshold") {
    const double dt = 0.05;
    // ||dt L|| = r dt (1 + nu r) crosses 1e-2 near r = 0.19
    for (double r = 0.15; r < 0.25; r += 0.0011) {
      const Vec3 xi{0.0, 0.0, r};
      CHECK(max_entry(phi1_matrix(dt, xi, p) - phi_quadrature(1, dt, xi, p)) <= 1e-10);
      CHECK(max_entry(phi2_matrix(dt, xi, p) - phi_quadrature(2, dt, xi, p)) <= 1e-10);
    }
  }
  SUBCASE("phi1 tends to I as dt |xi|^2 -> 0") {
    CHECK(max_entry(phi1_matrix(1e-9, {1.0, 2.0, 0.5}, p) - Matrix4c::Identity()) <= 1e-8);
  }
}

TEST_CASE("step") {
  const auto lat = build_lattice(16, 4.0 * kPi);
  const ViscosityParams p(0.9, 0.3, 1.1, 1.4);
  std::mt19937_64 rng(23);

  SUBCASE("linear-only steps reproduce the propagator") {
    const SpectralState s = greenprop::testing::random_band_state(lat, 7, rng);
    for (Scheme scheme : {Scheme::ExponentialEuler, Scheme::ETDRK2}) {
      const Stepper stepper(lat, p, 0.05, scheme, true);
      SpectralState v = s;
      for (int i = 0; i < 200; ++i) v = stepper.advance(v);
      const SpectralState ref = apply_propagator(s, 200 * 0.05, p, SymbolPart::Full, lat);
      CHECK(greenprop::testing::spectral_distance(v, ref) <= 1e-10 * greenprop::testing::spectral_size(ref));
    }
  }
  SUBCASE("zero state stays zero") {
    SpectralState v = SpectralState::zeros(lat);
    for (int i = 0; i < 5; ++i) v = step(v, 0.1, p, Scheme::ETDRK2, lat);
    CHECK(greenprop::testing::spectral_size(v) == 0.0);
  }
  SUBCASE("vacuum propagates") {
    SpectralState v = SpectralState::zeros(lat);
    v.coeffs[0][0] = -1.0;
    CHECK_THROWS_AS(step(v, 0.1, p, Scheme::ETDRK2, lat), VacuumError);
  }
  SUBCASE("observed orders under dt halving") {
    const SpectralState s0 = dealias(greenprop::testing::random_band_state(lat, 5, rng, 0.05), lat);
    const auto solve = [&](Scheme scheme, double dt) {
      const Stepper stepper(lat, p, dt, scheme);
      SpectralState v = s0;
      const long n = std::lround(1.0 / dt);
      for (long i = 0; i < n; ++i) v = stepper.advance(v);
      return v;
    };
    const SpectralState ref = solve(Scheme::ETDRK2, 0.025 / 8);
    const double e1 = greenprop::testing::spectral_distance(solve(Scheme::ETDRK2, 0.1), ref);
    const double e2 = greenprop::testing::spectral_distance(solve(Scheme::ETDRK2, 0.05), ref);
    const double e3 = greenprop::testing::spectral_distance(solve(Scheme::ETDRK2, 0.025), ref);
    const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
    MESSAGE("ETDRK2 orders " << o1 << " " << o2);
    CHECK(o1 >= 1.7);
    CHECK(o1 <= 2.3);
    CHECK(o2 >= 1.7);
    CHECK(o2 <= 2.3);
    const SpectralState ref1 = solve(Scheme::ExponentialEuler, 0.025 / 8);
    const double f1 = greenprop::testing::spectral_distance(solve(Scheme::ExponentialEuler, 0.1), ref1);
    const double f2 = greenprop::testing::spectral_distance(solve(Scheme::ExponentialEuler, 0.05), ref1);
    const double eo = std::log2(f1 / f2);
    MESSAGE("ExponentialEuler order " << eo);
    CHECK(eo >= 0.8);
    CHECK(eo <= 1.3);
  }
}

TEST_CASE("run_simulation") {
  const auto lat = build_lattice(16, 4.0 * kPi);
  const ViscosityParams p(1.0, 0.0, 1.05, 1.4);
  std::mt19937_64 rng(31);

  SUBCASE("mass conservation and sampling cadence") {
    const PhysicalState init = to_physical(dealias(greenprop::testing::random_band_state(lat, 5, rng, 0.02), lat), lat);
    SchemeConfig cfg{Scheme::ETDRK2, 0.1, 3.0, 5};
    RunOptions opt;
    opt.enforce_apriori = false;
    const RunRecord rec = run_simulation(init, cfg, p, lat, opt);
    CHECK(rec.reason == Termination::Completed);
    CHECK(rec.steps_taken == 30);
    REQUIRE(rec.samples.size() == 7);
    for (std::size_t i = 0; i < rec.samples.size(); ++i) CHECK(rec.samples[i].t == doctest::Approx(0.5 * i));
    for (double m : rec.mass) CHECK(std::abs(m - rec.mass.front()) <= 1e-12);
    CHECK(std::abs(rec.final_state->coeffs[0][0].real() - rec.mass.front()) <= 1e-12);
    CHECK(rec.n4_sup.size() == rec.samples.size());
  }
  SUBCASE("large gradient trips the monitor at step 0") {
    // sup u = 0.2, sup grad u = 0.2 * 3.5 = 0.7
    PhysicalState init = PhysicalState::zeros(lat);
    for (std::size_t m = 0; m < lat.size(); ++m) init.u(0)[m] = 0.2 * std::sin(3.5 * lat.coords(m)[1] * lat.spacing());
    const RunRecord rec = run_simulation(init, {Scheme::ETDRK2, 0.1, 1.0, 1}, p, lat);
    CHECK(rec.reason == Termination::ThresholdViolation);
    CHECK(rec.steps_taken == 0);
    REQUIRE(!rec.monitors.empty());
    CHECK_FALSE(rec.monitors.front().ok);
    CHECK(rec.monitors.front().bound == "gradient");
  }
  SUBCASE("vacuum in the initial data") {
    PhysicalState init = PhysicalState::zeros(lat);
    init.rho()[5] = -1.0;
    const RunRecord rec = run_simulation(init, {Scheme::ETDRK2, 0.1, 1.0, 1}, p, lat);
    CHECK(rec.reason == Termination::VacuumAbort);
  }
  SUBCASE("linear-only runs are contractive sample by sample") {
    const PhysicalState init = to_physical(greenprop::testing::random_band_state(lat, 7, rng, 0.3), lat);
    RunOptions opt;
    opt.linear_only = true;
    opt.enforce_apriori = false;
    const RunRecord rec = run_simulation(init, {Scheme::ETDRK2, 0.05, 2.0, 1}, p, lat, opt);
    for (std::size_t i = 1; i < rec.samples.size(); ++i)
      CHECK(rec.samples[i].sobolev[0] <= rec.samples[i - 1].sobolev[0] * (1.0 + 1e-14));
  }
  SUBCASE("energy residual converges at second order") {
    // low band keeps dt mu |xi|^2 moderate so the centred difference is asymptotic
    const PhysicalState init = to_physical(dealias(greenprop::testing::random_band_state(lat, 2, rng, 0.1), lat), lat);
    RunOptions opt;
    opt.enforce_apriori = false;
    std::vector<double> worst;
    for (double dt : {0.025, 0.0125, 0.00625}) {
      const RunRecord rec = run_simulation(init, {Scheme::ETDRK2, dt, 1.0, 1}, p, lat, opt);
      double w = 0.0;
      for (const auto& [t, r] : energy_residuals(rec)) w = std::max(w, std::abs(r));
      worst.push_back(w);
    }
    const double o1 = std::log2(worst[0] / worst[1]), o2 = std::log2(worst[1] / worst[2]);
    MESSAGE("energy residual orders " << o1 << " " << o2);
    CHECK(o1 >= 1.7);
    CHECK(o2 >= 1.7);
  }
}

TEST_CASE("linear Gaussian run against the radial prediction") {
  const auto lat = build_lattice(32, 32.0 * kPi);
  const ViscosityParams p(1.0, 0.0, 1.0, 1.4);
  const double s3 = 1.0 / std::sqrt(3.0);
  const GaussianData data{1e-2, 6.0, {s3, s3, s3}};
  const PhysicalState init = greenprop::testing::gaussian_state(lat, data.eps, data.sigma, data.direction);
  RunOptions opt;
  opt.linear_only = true;
  opt.enforce_apriori = false;
  const RunRecord rec = run_simulation(init, {Scheme::ETDRK2, 0.5, 20.0, 4}, p, lat, opt);
  for (const auto& b : rec.samples) {
    const double expect = gaussian_linear_norm(b.t, 0, RadialMode::L2Kernel, p, data);
    CHECK(std::abs(b.sobolev[0] - expect) <= 0.02 * expect);
  }
}
