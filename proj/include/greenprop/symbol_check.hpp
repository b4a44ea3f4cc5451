#pragma once

// Seeded sampling plan and structural checks of the symbol against the
// independent matrix-exponential oracle.

#include <cstdint>
#include <random>
#include <vector>

#include "greenprop/green_symbol.hpp"

namespace greenprop {

struct SymbolSample {
  double t;
  double s;  ///< second time for the semigroup check
  Vec3 xi;
  ViscosityParams params;
  bool near_confluent;
};

/// `samples` draws with t, s in [0, 5], |xi| in [0, 10], uniform direction and
/// random admissible params, followed by `near_confluent` draws with |xi|
/// within 1e-4 of 2/nu.
std::vector<SymbolSample> symbol_sampling_plan(int samples, int near_confluent, std::uint64_t seed);

/// Random admissible parameters: mu in [0.2, 2], lambda_bulk in [-2mu/3, 2],
/// alpha in [0.5, 1.5], gamma in [1.1, 2].
ViscosityParams random_params(std::mt19937_64& rng);

struct SymbolCheckReport {
  int samples = 0;
  double max_oracle_error = 0.0;       ///< max entrywise |symbol - expm|
  double max_near_confluent_error = 0.0;
  double max_operator_norm = 0.0;
  double max_semigroup_error = 0.0;    ///< Frobenius
  double max_reality_error = 0.0;
  double max_part_sum_error = 0.0;
  double max_vieta_residual = 0.0;     ///< relative
};

SymbolCheckReport run_symbol_check(const std::vector<SymbolSample>& plan);

}  // namespace greenprop
