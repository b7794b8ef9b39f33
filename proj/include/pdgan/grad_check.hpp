#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pdgan/tensor.hpp"

namespace pdgan {

/// Result of comparing analytic gradients against central differences.
struct GradCheckReport {
  std::string op_name;
  double max_relative_error = 0.0;
  int tested_point_count = 0;
};

/// Probe under test: maps the given inputs to one output tensor. The checker
/// reduces the output with a fixed random weighting so every element
/// contributes to the scalar being differentiated.
using GradProbe = std::function<Tensor(const std::vector<Tensor>&)>;

/// Checks d(weighted sum of fn(inputs))/d(inputs) against central differences
/// at up to points_per_input randomly chosen coordinates per input. Relative
/// error uses max(|analytic|, |numeric|, 1e-8) as denominator.
GradCheckReport check_gradients(const std::string& name, const GradProbe& fn,
                                std::vector<Tensor> inputs, double step = 1e-5,
                                int points_per_input = 24, std::uint64_t seed = 7);

/// Checks for every differentiable primitive in ops.hpp.
std::vector<GradCheckReport> engine_op_gradient_checks();

}  // namespace pdgan
