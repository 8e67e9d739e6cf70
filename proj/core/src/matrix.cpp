#include "cuisine/matrix.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "cuisine/error.hpp"

namespace cuisine {

DenseMatrix DenseMatrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  DenseMatrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t r = 0;
  for (const auto& row : rows) {
    assert(row.size() == m.cols());
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

void DenseMatrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void DenseMatrix::scale(double s) {
  for (auto& v : data_) v *= s;
}

void DenseMatrix::add_scaled(const DenseMatrix& other, double s) {
  assert(rows_ == other.rows_ && cols_ == other.cols_);
  const double* src = other.data_.data();
  double* dst = data_.data();
  for (std::size_t i = 0; i < data_.size(); ++i) dst[i] += s * src[i];
}

double DenseMatrix::squared_norm() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return acc;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

// C (+)= A * B with A (m x k) and B (k x n), all row-major. The k-in-the-middle
// loop order keeps B row accesses contiguous.
void gemm_nn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    double* crow = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C (+)= A^T * B with A (k x m), B (k x n).
void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.data() + p * m;
    const double* brow = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C (+)= A * B^T with A (m x k), B (n x k).
void gemm_nt(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    double* crow = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C (+)= A^T * B^T with A (k x m), B (n x k).
void gemm_tt(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.rows();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.data() + p * m;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * b(j, p);
    }
  }
}

}  // namespace

void gemm(const DenseMatrix& a, bool transpose_a, const DenseMatrix& b,
          bool transpose_b, DenseMatrix& out, bool accumulate) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t ka = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (ka != kb) throw Error("gemm: inner dimensions disagree");
  if (!accumulate) {
    out = DenseMatrix(m, n, 0.0);
  } else if (out.rows() != m || out.cols() != n) {
    throw Error("gemm: accumulate target has wrong shape");
  }
  if (!transpose_a && !transpose_b) {
    gemm_nn(a, b, out);
  } else if (transpose_a && !transpose_b) {
    gemm_tn(a, b, out);
  } else if (!transpose_a && transpose_b) {
    gemm_nt(a, b, out);
  } else {
    gemm_tt(a, b, out);
  }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out;
  gemm(a, false, b, false, out, false);
  return out;
}

}  // namespace cuisine
