#include "imti/tensor.hpp"

#include <cmath>

#include "imti/common.hpp"

namespace imti {

bool Matrix::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ValidationError(strf("matmul_nn: %zux%zu vs %zux%zu", a.rows(), a.cols(), b.rows(), b.cols()));
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      double* orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ValidationError(strf("matmul_nt: %zux%zu vs %zux%zu", a.rows(), a.cols(), b.rows(), b.cols()));
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw ValidationError(strf("matmul_tn: %zux%zu vs %zux%zu", a.rows(), a.cols(), b.rows(), b.cols()));
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw ValidationError(strf("hstack: row mismatch %zu vs %zu", a.rows(), b.rows()));
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double* orow = out.row(r);
    const double* arow = a.row(r);
    const double* brow = b.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) orow[c] = arow[c];
    for (std::size_t c = 0; c < b.cols(); ++c) orow[a.cols() + c] = brow[c];
  }
  return out;
}

Matrix reverse_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* src = a.row(a.rows() - 1 - r);
    double* dst = out.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) dst[c] = src[c];
  }
  return out;
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  v.assign(shape.empty() ? 0 : n, 0.0);
}

bool Tensor::all_finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace imti
