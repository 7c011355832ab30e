#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gavatar/types.hpp"

namespace gavatar {

// Uniform adjoint contract: a pure forward map plus its vector-Jacobian
// product, with a sampler that stays clear of documented nondifferentiable
// sets (ReLU kinks, indicator gates, polar poles).
struct DiffOp {
  std::string name;
  int input_dim = 0;
  int output_dim = 0;
  double tolerance = 1e-5;
  std::function<VecX(const VecX&)> forward;
  std::function<VecX(const VecX&, const VecX&)> vjp;  // (input, upstream) -> input gradient
  std::function<VecX(std::mt19937_64&)> sample;
  std::function<bool(const VecX&)> at_kink;  // optional exclusion-zone validator
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int worst_coord = -1;
  int worst_trial = -1;
};

// Central-difference comparison of the vjp against the forward map, one random
// upstream per trial. Throws SampledAtKink when the sampler violates its own
// exclusion zones.
GradCheckResult check_gradients(const DiffOp& op, int trials, double h, std::mt19937_64& rng);

// Kink exclusion margins shared by the samplers.
inline constexpr double kKinkMargin = 1e-3;
inline constexpr double kPoleMargin = 0.999;  // |z/r| must stay below this

// Every differentiable operation in the project, backed by small fixed
// scenarios. The registry test pins the expected set of names.
std::vector<DiffOp> gradcheck_registry();

}  // namespace gavatar
