#include "cuisine/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "cuisine/error.hpp"

namespace cuisine {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void softmax_inplace(std::span<double> v) {
  if (v.empty()) throw Error("softmax: empty input");
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  // All -inf would make m = -inf; that means an all-masked row, which callers
  // must not produce.
  if (!std::isfinite(m)) {
    if (std::isinf(m) && m < 0) throw Error("softmax: all entries are -inf");
    throw Error("softmax: non-finite input");
  }
  double z = 0.0;
  for (auto& x : v) {
    x = std::exp(x - m);
    z += x;
  }
  for (auto& x : v) x /= z;
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  softmax_inplace(out);
  return out;
}

double cross_entropy(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw Error("cross_entropy: label out of range");
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], kCrossEntropyEps));
}

namespace {
constexpr std::size_t kBlock = 8;

double pairwise_recurse(const double* v, std::size_t n) {
  if (n <= kBlock) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_recurse(v, half) + pairwise_recurse(v + half, n - half);
}
}  // namespace

double pairwise_sum(std::span<const double> v) {
  return pairwise_recurse(v.data(), v.size());
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

int argmax(std::span<const double> v) {
  if (v.empty()) throw Error("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace cuisine
