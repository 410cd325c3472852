#include "faor/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "faor/errors.hpp"

namespace faor::ad {

GradCheckReport finite_difference_check(const std::function<Tensor<double>()>& loss_fn,
                                        const std::vector<NamedTensor>& inputs,
                                        const GradCheckOptions& options) {
  for (const auto& in : inputs) {
    Tensor<double> t = in.tensor;
    t.zero_grad();
  }
  backward(loss_fn());

  struct Slot {
    std::size_t input;
    std::size_t index;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].tensor.numel(); ++j) slots.push_back({i, j});
  }
  if (slots.size() > options.samples) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(slots.begin(), slots.end(), rng);
    slots.resize(options.samples);
  }

  GradCheckReport report;
  for (const Slot& s : slots) {
    Tensor<double> t = inputs[s.input].tensor;
    const double analytic = t.has_grad() ? t.grad()[s.index] : 0.0;
    double& value = t.mutable_data()[s.index];
    const double saved = value;
    double plus = 0.0, minus = 0.0;
    {
      NoGradGuard guard;
      value = saved + options.step;
      plus = loss_fn().item();
      value = saved - options.step;
      minus = loss_fn().item();
    }
    value = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
    const double err = std::abs(analytic - numeric) / denom;
    ++report.checked;
    if (err > report.max_relative_error || report.checked == 1) {
      report.max_relative_error = err;
      report.worst_parameter = inputs[s.input].name;
      report.worst_index = s.index;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

GradCheckReport finite_difference_check(const std::function<Tensor<double>()>& loss_fn,
                                        const ParameterSet<double>& params,
                                        const GradCheckOptions& options) {
  std::vector<NamedTensor> inputs;
  for (const auto& p : params) inputs.push_back({p.name, p.tensor});
  return finite_difference_check(loss_fn, inputs, options);
}

}  // namespace faor::ad
