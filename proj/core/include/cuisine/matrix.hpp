#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace cuisine {

/// Row-major dense matrix of doubles. The single numeric container for model
/// parameters, gradients and activations.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(double value);
  void scale(double s);
  /// this += s * other. Shapes must match.
  void add_scaled(const DenseMatrix& other, double s);

  double squared_norm() const;
  bool all_finite() const;

  bool operator==(const DenseMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out (+)= op(a) * op(b) where op is optional transposition.
/// If accumulate is false, out is resized and overwritten.
void gemm(const DenseMatrix& a, bool transpose_a, const DenseMatrix& b,
          bool transpose_b, DenseMatrix& out, bool accumulate = false);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace cuisine
