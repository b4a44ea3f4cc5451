#include "greenprop/symbol_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace greenprop {

ViscosityParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double mu = 0.2 + 1.8 * unit(rng);
  const double lo = -2.0 * mu / 3.0;
  const double lambda = lo + (2.0 - lo) * unit(rng);
  const double alpha = 0.5 + unit(rng);
  const double gamma = 1.1 + 0.9 * unit(rng);
  return {mu, lambda, alpha, gamma};
}

namespace {

Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  for (;;) {
    Vec3 v{normal(rng), normal(rng), normal(rng)};
    const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (r > 1e-8) return {v[0] / r, v[1] / r, v[2] / r};
  }
}

double max_entry(const Matrix4c& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

std::vector<SymbolSample> symbol_sampling_plan(int samples, int near_confluent,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SymbolSample> plan;
  plan.reserve(static_cast<std::size_t>(samples + near_confluent));
  for (int i = 0; i < samples + near_confluent; ++i) {
    const bool confluent = i >= samples;
    const ViscosityParams params = random_params(rng);
    const double t = 5.0 * unit(rng);
    const double s = 5.0 * unit(rng);
    const double r = confluent ? 2.0 / params.nu() + 1e-4 * (2.0 * unit(rng) - 1.0)
                               : 10.0 * unit(rng);
    const Vec3 dir = random_direction(rng);
    plan.push_back({t, s, {r * dir[0], r * dir[1], r * dir[2]}, params, confluent});
  }
  return plan;
}

SymbolCheckReport run_symbol_check(const std::vector<SymbolSample>& plan) {
  SymbolCheckReport rep;
  rep.samples = static_cast<int>(plan.size());
  for (const auto& sample : plan) {
    const Vec3& xi = sample.xi;
    const Matrix4c g = symbol(sample.t, xi, sample.params).entries;
    const double oracle_err = max_entry(g - expm_oracle(sample.t, xi, sample.params));
    rep.max_oracle_error = std::max(rep.max_oracle_error, oracle_err);
    if (sample.near_confluent)
      rep.max_near_confluent_error = std::max(rep.max_near_confluent_error, oracle_err);

    rep.max_operator_norm = std::max(rep.max_operator_norm, operator_norm(g));

    const Matrix4c gs = symbol(sample.s, xi, sample.params).entries;
    const Matrix4c gts = symbol(sample.t + sample.s, xi, sample.params).entries;
    rep.max_semigroup_error = std::max(rep.max_semigroup_error, (gts - g * gs).norm());

    const Vec3 neg{-xi[0], -xi[1], -xi[2]};
    const Matrix4c gneg = symbol(sample.t, neg, sample.params).entries;
    rep.max_reality_error = std::max(rep.max_reality_error, max_entry(gneg - g.conjugate()));

    const SymbolParts parts = symbol_parts(sample.t, xi, sample.params);
    rep.max_part_sum_error = std::max(
        rep.max_part_sum_error,
        max_entry(parts.low.entries + parts.high_regular.entries + parts.high_singular.entries - g));

    const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    if (r > 0.0) {
      const EigenPair e = eigenvalues(r, sample.params);
      const double r2 = r * r;
      const double nu = sample.params.nu();
      const double sum_res = std::abs(e.lambda_plus + e.lambda_minus + nu * r2) / (nu * r2);
      const double prod_res = std::abs(e.lambda_plus * e.lambda_minus - r2) / r2;
      rep.max_vieta_residual = std::max({rep.max_vieta_residual, sum_res, prod_res});
    }
  }
  return rep;
}

}  // namespace greenprop
