#include <cmath>
#include <random>

#include "doctest.h"
#include "greenprop/errors.hpp"
#include "greenprop/spectral_core.hpp"
#include "test_support.hpp"

using namespace greenprop;
using greenprop::testing::max_abs_diff;
using greenprop::testing::random_band_state;

namespace {

RealField sample(const WavenumberLattice& lattice, auto&& f) {
  RealField out(lattice.size());
  const double h = lattice.spacing();
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const auto [i, j, k] = lattice.coords(m);
    out[m] = f(i * h, j * h, k * h);
  }
  return out;
}

}  // namespace

TEST_CASE("viscosity params validate their invariants") {
  const ViscosityParams p(1.0, 0.5, 1.1, 1.4);
  CHECK(p.nu() == 2.5);
  CHECK_THROWS_AS(ViscosityParams(0.0, 0.0, 1.0, 1.4), ConfigurationError);
  CHECK_THROWS_AS(ViscosityParams(1.0, -1.0, 1.0, 1.4), ConfigurationError);  // 2mu+3lambda < 0
  CHECK_NOTHROW(ViscosityParams(1.0, -2.0 / 3.0, 1.0, 1.4));
  CHECK_THROWS_AS(ViscosityParams(1.0, 0.0, 0.0, 1.4), ConfigurationError);
  CHECK_THROWS_AS(ViscosityParams(1.0, 0.0, 1.0, 1.0), ConfigurationError);
}

TEST_CASE("build_lattice") {
  SUBCASE("unit spacing on a 2 pi box") {
    const auto lat = build_lattice(8, 2.0 * kPi);
    for (int i = 0; i < 8; ++i) CHECK(lat.wavenumber(i) == doctest::Approx(lat.signed_index(i)).epsilon(1e-15));
    CHECK(lat.signed_index(4) == -4);
    CHECK(lat.signed_index(3) == 3);
  }
  SUBCASE("smallest positive wavenumber on a 4 pi box") {
    const auto lat = build_lattice(8, 4.0 * kPi);
    CHECK(lat.wavenumber(1) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("configuration errors") {
    CHECK_THROWS_AS(build_lattice(7, 1.0), ConfigurationError);
    CHECK_THROWS_AS(build_lattice(6, 1.0), ConfigurationError);
    CHECK_THROWS_AS(build_lattice(514, 1.0), ConfigurationError);
    CHECK_THROWS_AS(build_lattice(8, 0.0), ConfigurationError);
    CHECK_THROWS_AS(build_lattice(8, -1.0), ConfigurationError);
  }
  SUBCASE("dealias mask is false exactly when some |j| > n/3") {
    const auto lat = build_lattice(16, 1.0);
    for (std::size_t m = 0; m < lat.size(); ++m) {
      bool expect = true;
      for (int c : lat.coords(m)) expect = expect && 3 * std::abs(lat.signed_index(c)) <= 16;
      CHECK(lat.keeps(m) == expect);
    }
  }
}

TEST_CASE("transforms") {
  const auto lat = build_lattice(16, 3.0);
  const double L = lat.box_length();

  SUBCASE("constant field maps to the zero mode") {
    const RealField f(lat.size(), 2.5);
    const auto c = to_spectral(f, lat);
    CHECK(c[0].real() == doctest::Approx(2.5).epsilon(1e-15));
    double rest = 0.0;
    for (std::size_t m = 1; m < c.size(); ++m) rest = std::max(rest, std::abs(c[m]));
    CHECK(rest < 1e-15);
  }
  SUBCASE("cos(2 pi x1 / L) has two modes of value 1/2") {
    const auto f = sample(lat, [&](double x, double, double) { return std::cos(2 * kPi * x / L); });
    const auto c = to_spectral(f, lat);
    const std::size_t plus = lat.index(1, 0, 0);
    const std::size_t minus = lat.index(15, 0, 0);
    CHECK(std::abs(c[plus] - 0.5) < 1e-15);
    CHECK(std::abs(c[minus] - 0.5) < 1e-15);
    int nonzero = 0;
    for (const auto& v : c) nonzero += std::abs(v) > 1e-14 ? 1 : 0;
    CHECK(nonzero == 2);
  }
  SUBCASE("round trip on 100 random smooth states") {
    std::mt19937_64 rng(11);
    const auto small = build_lattice(8, 1.7);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto phys = to_physical(random_band_state(small, 3, rng), small);
      const auto back = to_physical(to_spectral(phys, small), small);
      for (int c = 0; c < 4; ++c) {
        const double scale = greenprop::testing::max_abs(phys.components[c]);
        worst = std::max(worst, max_abs_diff(phys.components[c], back.components[c]) / scale);
      }
    }
    CHECK(worst <= 1e-12);
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(to_spectral(RealField(10, 0.0), lat), ShapeError);
    CHECK_THROWS_AS(to_physical(ComplexField(10), lat), ShapeError);
  }
}

TEST_CASE("spectral_derivative") {
  const auto lat = build_lattice(32, 2.0 * kPi);
  const auto f = sample(lat, [](double x, double, double) { return std::cos(x); });
  const auto c = to_spectral(f, lat);

  SUBCASE("d/dx1 cos(x1) = -sin(x1)") {
    const auto d = to_physical(spectral_derivative(c, lat, 0, 1), lat);
    const auto expect = sample(lat, [](double x, double, double) { return -std::sin(x); });
    CHECK(max_abs_diff(d, expect) <= 1e-12);
  }
  SUBCASE("order zero is the identity") {
    const auto d = spectral_derivative(c, lat, 1, 0);
    for (std::size_t m = 0; m < c.size(); ++m) CHECK(d[m] == c[m]);
  }
  SUBCASE("second derivative of a plane wave multiplies by -xi_axis^2") {
    ComplexField mode(lat.size());
    const std::size_t m = lat.index(3, 30, 5);
    mode[m] = Complex(0.3, -0.7);
    const auto d = spectral_derivative(mode, lat, 1, 2);
    const double xi = lat.wavenumber(30);
    CHECK(std::abs(d[m] - (-xi * xi) * mode[m]) < 1e-14);
  }
  SUBCASE("orders above four are rejected") {
    CHECK_THROWS_AS(spectral_derivative(c, lat, 0, 5), UnsupportedOrderError);
  }
  SUBCASE("Hermitian symmetry preserved, including the Nyquist plane") {
    std::mt19937_64 rng(3);
    const auto small = build_lattice(8, 2.0);
    // Full-band coefficients obtained from a random real field populate Nyquist modes too.
    RealField noise(small.size());
    std::normal_distribution<double> normal;
    for (auto& v : noise) v = normal(rng);
    const auto coeffs = to_spectral(noise, small);
    CHECK(hermitian_defect(coeffs, small) < 1e-15);
    for (int axis = 0; axis < 3; ++axis)
      for (int order = 0; order <= 4; ++order)
        CHECK(hermitian_defect(spectral_derivative(coeffs, small, axis, order), small) < 1e-13);
  }
}

TEST_CASE("dealias") {
  const auto lat = build_lattice(12, 1.0);
  std::mt19937_64 rng(5);
  SUBCASE("band-limited state is unchanged") {
    const auto s = random_band_state(lat, 4, rng);  // 4 = n/3
    const auto d = dealias(s, lat);
    CHECK(greenprop::testing::spectral_distance(s, d) == 0.0);
  }
  SUBCASE("mode at j = n/2 - 1 is removed") {
    SpectralState s = SpectralState::zeros(lat);
    s.coeffs[2][lat.index(5, 0, 0)] = 1.0;
    s.coeffs[2][lat.index(7, 0, 0)] = 1.0;
    const auto d = dealias(s, lat);
    CHECK(greenprop::testing::spectral_size(d) == 0.0);
  }
  SUBCASE("idempotent and symmetry preserving") {
    RealField noise(lat.size());
    std::normal_distribution<double> normal;
    for (auto& v : noise) v = normal(rng);
    SpectralState s;
    for (auto& c : s.coeffs) c = to_spectral(noise, lat);
    const auto once = dealias(s, lat);
    const auto twice = dealias(once, lat);
    CHECK(greenprop::testing::spectral_distance(once, twice) == 0.0);
    CHECK(hermitian_defect(once.coeffs[0], lat) < 1e-15);
  }
}

TEST_CASE("lp_norm") {
  const auto lat = build_lattice(32, 2.0 * kPi);
  const double volume = lat.volume();

  SUBCASE("constant field") {
    const RealField f(lat.size(), -1.5);
    for (double p : {1.0, 4.0 / 3.0, 2.0, 4.0})
      CHECK(lp_norm(f, LpExponent::finite(p), lat) ==
            doctest::Approx(1.5 * std::pow(volume, 1.0 / p)).epsilon(1e-12));
    CHECK(lp_norm(f, LpExponent::infinity(), lat) == doctest::Approx(1.5));
  }
  SUBCASE("sup of sin(x1)") {
    const auto f = sample(lat, [](double x, double, double) { return std::sin(x); });
    CHECK(std::abs(lp_norm(f, LpExponent::infinity(), lat) - 1.0) <= 1e-3);
  }
  SUBCASE("Plancherel: physical Riemann sum equals spectral sum") {
    std::mt19937_64 rng(17);
    const auto s = random_band_state(lat, 10, rng);
    const auto phys = to_physical(s, lat);
    double spectral = 0.0;
    for (const auto& c : s.coeffs)
      for (const auto& v : c) spectral += std::norm(v);
    spectral = std::sqrt(spectral * volume);
    const double physical = lp_norm(phys.components, LpExponent::finite(2.0), lat);
    CHECK(std::abs(physical - spectral) <= 1e-10 * spectral);
  }
  SUBCASE("absolute homogeneity") {
    std::mt19937_64 rng(19);
    const auto phys = to_physical(random_band_state(lat, 6, rng), lat);
    auto scaled = phys;
    for (auto& comp : scaled.components)
      for (auto& v : comp) v *= -3.25;
    for (const char* p : {"1", "4/3", "2", "4", "inf"}) {
      const auto e = LpExponent::parse(p);
      const double a = lp_norm(phys.components, e, lat);
      CHECK(std::abs(lp_norm(scaled.components, e, lat) - 3.25 * a) <= 1e-12 * 3.25 * a);
    }
  }
  SUBCASE("unsupported exponent") {
    CHECK_THROWS_AS(LpExponent::finite(3.0), ConfigurationError);
    CHECK_THROWS_AS(LpExponent::parse("3"), ConfigurationError);
  }
}

TEST_CASE("sobolev_seminorm") {
  const auto lat = build_lattice(16, 2.0 * kPi);
  std::mt19937_64 rng(23);

  SUBCASE("k = 0 equals the L2 norm (Parseval consistency)") {
    for (int trial = 0; trial < 5; ++trial) {
      const auto s = random_band_state(lat, 5, rng);
      const double l2 = lp_norm(to_physical(s, lat).components, LpExponent::finite(2.0), lat);
      CHECK(std::abs(sobolev_seminorm(s, 0, lat) - l2) <= 1e-10 * l2);
    }
  }
  SUBCASE("single mode at |xi| = 2 scales by 2^k") {
    SpectralState s = SpectralState::zeros(lat);
    s.coeffs[0][lat.index(2, 0, 0)] = 0.3;
    s.coeffs[0][lat.index(14, 0, 0)] = 0.3;
    const double base = sobolev_seminorm(s, 0, lat);
    for (int k = 1; k <= 4; ++k)
      CHECK(sobolev_seminorm(s, k, lat) == doctest::Approx(std::pow(2.0, k) * base).epsilon(1e-13));
  }
  SUBCASE("k = 1 equals the norm of the twelve first derivatives") {
    const auto s = random_band_state(lat, 6, rng);
    std::vector<RealField> grads;
    for (int c = 0; c < 4; ++c)
      for (int axis = 0; axis < 3; ++axis)
        grads.push_back(to_physical(spectral_derivative(s, lat, c, axis, 1), lat));
    const double direct = lp_norm(grads, LpExponent::finite(2.0), lat);
    const double multiplier = sobolev_seminorm(s, 1, lat);
    CHECK(std::abs(direct - multiplier) <= 1e-10 * multiplier);
  }
  SUBCASE("orders above four are rejected") {
    CHECK_THROWS_AS(sobolev_seminorm(SpectralState::zeros(lat), 5, lat), UnsupportedOrderError);
  }
}
