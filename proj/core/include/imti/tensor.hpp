#pragma once

#include <cstddef>
#include <vector>

namespace imti {

// Dense row-major matrix of doubles; used for frame-major feature sequences
// ([T x F]) and for 2D weight blocks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return v_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

  double* row(std::size_t r) { return v_.data() + r * cols_; }
  const double* row(std::size_t r) const { return v_.data() + r * cols_; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::size_t size() const { return v_.size(); }

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

// out[m x n] = a[m x k] * b[k x n]
Matrix matmul_nn(const Matrix& a, const Matrix& b);
// out[m x n] = a[m x k] * b[n x k]^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// out[m x n] = a[k x m]^T * b[k x n]
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// Column-wise concatenation; row counts must match.
Matrix hstack(const Matrix& a, const Matrix& b);

Matrix reverse_rows(const Matrix& a);

// Arbitrary-rank parameter block; rank stays <= 4 in this codebase.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

  std::size_t size() const { return v.size(); }
  std::size_t rank() const { return shape.size(); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }

  // rank-2 view: rows = shape[0], cols = shape[1]
  std::size_t rows() const { return shape[0]; }
  std::size_t cols() const { return shape[1]; }
  double& at(std::size_t r, std::size_t c) { return v[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * shape[1] + c]; }

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  bool all_finite() const;
};

}  // namespace imti
