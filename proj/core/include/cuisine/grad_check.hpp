#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cuisine/matrix.hpp"

namespace cuisine {

/// Named view of a parameter tensor paired with its analytic gradient.
/// Every trainable model exposes its parameters this way; the gradient
/// checker, the SGD update and serialization all iterate the same list.
struct TensorRef {
  std::string name;
  DenseMatrix* value = nullptr;
  DenseMatrix* grad = nullptr;
};

struct GradCheckOptions {
  double eps = 1e-5;
  /// 0 checks every entry; otherwise that many entries are sampled per tensor.
  std::size_t max_samples_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct TensorCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
  std::vector<TensorCheckResult> tensors;
};

/// Central-difference verification of analytic gradients.
///
/// backward_fn must populate every TensorRef::grad with the gradient of the
/// scalar returned by loss_fn, both evaluated at the current parameter
/// values. For each sampled parameter entry the checker computes
/// (loss(v+eps) - loss(v-eps)) / (2 eps) and reports the relative error
/// |a - n| / max(|a|, |n|, 1e-8) against the analytic value a.
GradCheckReport grad_check(std::span<TensorRef> tensors,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& backward_fn,
                           const GradCheckOptions& options = {});

}  // namespace cuisine
