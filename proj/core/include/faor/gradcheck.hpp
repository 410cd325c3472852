#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "faor/tensor.hpp"

namespace faor::ad {

struct GradCheckOptions {
  double step = 1e-4;
  // Check every scalar when there are at most this many, else a random
  // subset of this size.
  std::size_t samples = 200;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct NamedTensor {
  std::string name;
  Tensor<double> tensor;
};

// Compares backward() against central differences of `loss_fn`, which must
// rebuild the graph from the current tensor values on every call.
GradCheckReport finite_difference_check(const std::function<Tensor<double>()>& loss_fn,
                                        const std::vector<NamedTensor>& inputs,
                                        const GradCheckOptions& options = {});

GradCheckReport finite_difference_check(const std::function<Tensor<double>()>& loss_fn,
                                        const ParameterSet<double>& params,
                                        const GradCheckOptions& options = {});

}  // namespace faor::ad
