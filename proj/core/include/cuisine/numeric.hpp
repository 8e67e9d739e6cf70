#pragma once

#include <span>
#include <vector>

namespace cuisine {

/// Floor applied to probabilities before taking log in cross_entropy.
inline constexpr double kCrossEntropyEps = 1e-12;

/// Numerically stable logistic function. Safe for the whole double range:
/// never overflows, underflows gracefully to subnormals for very negative x.
double sigmoid(double x);

/// Stable softmax with max subtraction. Entries of -inf are allowed and map
/// to exact zeros (used by attention masking).
std::vector<double> softmax(std::span<const double> v);
void softmax_inplace(std::span<double> v);

/// -ln(max(probs[label], eps)).
double cross_entropy(std::span<const double> probs, int label);

/// Deterministic chunked pairwise summation: blocks of 8 are summed
/// sequentially, block sums are combined pairwise. The reduction order is a
/// pure function of the length, so sums are bit-stable regardless of how the
/// values were produced.
double pairwise_sum(std::span<const double> v);

double mean(std::span<const double> v);

/// Index of the maximum entry; ties resolve to the lowest index.
int argmax(std::span<const double> v);

}  // namespace cuisine
