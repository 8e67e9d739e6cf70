#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cuisine/grad_check.hpp"
#include "cuisine/matrix.hpp"
#include "cuisine/numeric.hpp"
#include "cuisine/prng.hpp"

using namespace cuisine;

TEST_CASE("sigmoid midpoint and symmetry") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  Prng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-30.0, 30.0);
    CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) < 1e-12);
  }
}

TEST_CASE("sigmoid stays finite deep in the tails") {
  const double lo = sigmoid(-745.0);
  CHECK(std::isfinite(lo));
  CHECK(lo > 0.0);
  CHECK(lo <= 1e-300);
  CHECK(sigmoid(745.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("sigmoid equals the two-way softmax") {
  Prng rng(12);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-40.0, 40.0);
    const std::vector<double> p = softmax(std::vector<double>{x, 0.0});
    CHECK(std::abs(sigmoid(x) - p[0]) < 1e-12);
  }
}

TEST_CASE("softmax of a constant vector is uniform") {
  for (std::size_t k : {1u, 2u, 26u}) {
    const std::vector<double> p = softmax(std::vector<double>(k, 0.0));
    for (double v : p) CHECK(v == doctest::Approx(1.0 / static_cast<double>(k)).epsilon(1e-12));
  }
}

TEST_CASE("softmax is shift invariant") {
  Prng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng.below(16));
    for (double& x : v) x = rng.uniform(-5.0, 5.0);
    const double c = rng.uniform(-100.0, 100.0);
    std::vector<double> shifted = v;
    for (double& x : shifted) x += c;
    const std::vector<double> a = softmax(v);
    const std::vector<double> b = softmax(shifted);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("softmax survives huge logits") {
  const std::vector<double> p = softmax(std::vector<double>{1000.0, 0.0});
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[1] < 1e-300);
  CHECK(std::isfinite(p[0]));
  CHECK(std::isfinite(p[1]));
}

TEST_CASE("softmax sums to one for long random vectors") {
  Prng rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> v(1 + rng.below(1024));
    for (double& x : v) x = rng.uniform(-50.0, 50.0);
    const std::vector<double> p = softmax(v);
    double total = 0.0;
    for (double x : p) {
      CHECK(x > 0.0);
      total += x;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("cross entropy of a certain correct prediction is zero") {
  CHECK(cross_entropy(std::vector<double>{0.0, 1.0, 0.0}, 1) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("cross entropy of the uniform 26-way prediction is ln 26") {
  const std::vector<double> uniform(26, 1.0 / 26.0);
  for (int label = 0; label < 26; ++label) {
    CHECK(std::abs(cross_entropy(uniform, label) - std::log(26.0)) < 1e-9);
  }
}

TEST_CASE("cross entropy clamps a zero probability instead of overflowing") {
  const double loss = cross_entropy(std::vector<double>{1.0, 0.0}, 1);
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
}

TEST_CASE("batch mean cross entropy matches per-example hand sums") {
  const std::vector<std::vector<double>> probs = {
      {0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}, {0.25, 0.25, 0.5}};
  const std::vector<int> labels = {0, 1, 2};
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    total += cross_entropy(probs[i], labels[i]);
  }
  const double expected =
      -(std::log(0.7) + std::log(0.8) + std::log(0.5)) / 3.0;
  CHECK(std::abs(total / 3.0 - expected) < 1e-12);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(argmax(std::vector<double>{1.0, 1.0, 1.0}) == 0);
  CHECK(argmax(std::vector<double>{0.0, 2.0, 2.0}) == 1);
  CHECK(argmax(std::vector<double>{-1.0, -3.0, -1.0}) == 0);
}

TEST_CASE("gemm matches a naive triple loop") {
  Prng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(8);
    const std::size_t k = 1 + rng.below(8);
    const std::size_t n = 1 + rng.below(8);
    DenseMatrix a(m, k), b(k, n);
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-2.0, 2.0);

    DenseMatrix out;
    gemm(a, false, b, false, out);
    REQUIRE(out.rows() == m);
    REQUIRE(out.cols() == n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double want = 0.0;
        for (std::size_t t = 0; t < k; ++t) want += a(i, t) * b(t, j);
        CHECK(std::abs(out(i, j) - want) < 1e-12);
      }
    }

    DenseMatrix out_t;
    gemm(b, true, a, true, out_t);
    REQUIRE(out_t.rows() == n);
    REQUIRE(out_t.cols() == m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(std::abs(out_t(i, j) - out(j, i)) < 1e-12);
      }
    }
  }
}

TEST_CASE("equal seeds give equal streams") {
  Prng a(987654321), b(987654321);
  for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams differ from the parent and from each other") {
  Prng parent(42);
  Prng d0 = parent.derive(0);
  Prng d1 = parent.derive(1);
  bool all_same_01 = true;
  bool all_same_p0 = true;
  Prng parent2(42);
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t x0 = d0.next_u64();
    if (x0 != d1.next_u64()) all_same_01 = false;
    if (x0 != parent2.next_u64()) all_same_p0 = false;
  }
  CHECK_FALSE(all_same_01);
  CHECK_FALSE(all_same_p0);
}

TEST_CASE("below stays in range and covers small supports") {
  Prng rng(7);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t v = rng.below(5);
    REQUIRE(v < 5);
    ++seen[v];
  }
  for (int count : seen) CHECK(count > 0);
}

TEST_CASE("shuffle permutes without losing elements") {
  Prng rng(8);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  std::vector<int> shuffled = v;
  rng.shuffle(shuffled);
  CHECK(shuffled != v);
  std::vector<int> sorted = shuffled;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
}

TEST_CASE("gradient checker is near-exact on a quadratic") {
  // loss(w) = 0.5 * sum_i (w_i - t_i)^2 has gradient w - t.
  DenseMatrix w(3, 4), grad(3, 4), target(3, 4);
  Prng rng(9);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w.data()[i] = rng.uniform(-1.0, 1.0);
    target.data()[i] = rng.uniform(-1.0, 1.0);
  }
  std::vector<TensorRef> tensors = {{"w", &w, &grad}};
  auto loss = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = w.data()[i] - target.data()[i];
      total += 0.5 * d * d;
    }
    return total;
  };
  auto backward = [&] {
    for (std::size_t i = 0; i < w.size(); ++i) {
      grad.data()[i] = w.data()[i] - target.data()[i];
    }
  };
  GradCheckOptions opts;
  opts.eps = 1e-4;
  const GradCheckReport report = grad_check(tensors, loss, backward, opts);
  CHECK(report.max_rel_error < 1e-7);
  CHECK(report.checked == w.size());
}

TEST_CASE("gradient checker flags a corrupted gradient") {
  DenseMatrix w(2, 2, 0.5), grad(2, 2);
  std::vector<TensorRef> tensors = {{"w", &w, &grad}};
  auto loss = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) total += w.data()[i] * w.data()[i];
    return total;
  };
  auto backward = [&] {
    for (std::size_t i = 0; i < w.size(); ++i) grad.data()[i] = 2.0 * w.data()[i] + 1.0;
  };
  GradCheckOptions opts;
  opts.eps = 1e-4;
  const GradCheckReport report = grad_check(tensors, loss, backward, opts);
  CHECK(report.max_rel_error > 0.1);
}
