#include "cuisine/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cuisine/error.hpp"
#include "cuisine/prng.hpp"

namespace cuisine {

GradCheckReport grad_check(std::span<TensorRef> tensors,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& backward_fn,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw ConfigError("grad_check: eps must be positive");

  backward_fn();

  GradCheckReport report;
  Prng rng(options.seed);

  for (auto& t : tensors) {
    if (t.value == nullptr || t.grad == nullptr)
      throw ConfigError("grad_check: tensor '" + t.name + "' has null value or grad");
    if (t.value->size() != t.grad->size())
      throw ConfigError("grad_check: tensor '" + t.name + "' grad shape mismatch");

    TensorCheckResult tc;
    tc.name = t.name;

    const std::size_t n = t.value->size();
    std::vector<std::size_t> indices;
    if (options.max_samples_per_tensor == 0 || options.max_samples_per_tensor >= n) {
      indices.resize(n);
      for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    } else {
      // Sample without replacement via partial Fisher-Yates.
      std::vector<std::size_t> pool(n);
      for (std::size_t i = 0; i < n; ++i) pool[i] = i;
      for (std::size_t i = 0; i < options.max_samples_per_tensor; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
        indices.push_back(pool[i]);
      }
    }

    double* values = t.value->data();
    const double* grads = t.grad->data();
    for (std::size_t idx : indices) {
      const double saved = values[idx];
      values[idx] = saved + options.eps;
      const double loss_plus = loss_fn();
      values[idx] = saved - options.eps;
      const double loss_minus = loss_fn();
      values[idx] = saved;
      if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus))
        throw Error("grad_check: non-finite loss at tensor '" + t.name + "'");

      const double numeric = (loss_plus - loss_minus) / (2.0 * options.eps);
      const double analytic = grads[idx];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(analytic - numeric) / denom;
      if (rel > tc.max_rel_error) tc.max_rel_error = rel;
      ++tc.checked;
    }

    if (tc.max_rel_error > report.max_rel_error) {
      report.max_rel_error = tc.max_rel_error;
      report.worst_tensor = tc.name;
    }
    report.checked += tc.checked;
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

}  // namespace cuisine
