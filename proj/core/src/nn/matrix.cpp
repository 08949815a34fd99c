#include "microweather/nn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mw::nn {

namespace {

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()));
}

void prepare_out(Matrix& out, std::size_t rows, std::size_t cols, bool accumulate) {
  if (accumulate) {
    if (out.rows() != rows || out.cols() != cols) {
      throw std::invalid_argument("gemm: accumulate target has wrong shape");
    }
  } else {
    out.resize(rows, cols, 0.0);
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw std::invalid_argument("Matrix: data size does not match shape");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> data)
    : Matrix(rows, cols, std::vector<double>(data)) {}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

void Matrix::resize(std::size_t rows, std::size_t cols, double fill) {
  rows_ = rows;
  cols_ = cols;
  data_.assign(rows * cols, fill);
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void gemm(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  if (a.cols() != b.rows()) shape_fail("gemm", a, b);
  const std::size_t m = a.rows();
  const std::size_t k_dim = a.cols();
  const std::size_t n = b.cols();
  prepare_out(out, m, n, accumulate);
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict o = out.row(i);
    const double* ai = a.row(i);
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* __restrict bk = b.row(k);
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * bk[j];
    }
  }
}

void gemm_bt(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  if (a.cols() != b.cols()) shape_fail("gemm_bt", a, b);
  gemm(a, b.transposed(), out, accumulate);
}

void gemm_at(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  if (a.rows() != b.rows()) shape_fail("gemm_at", a, b);
  const std::size_t m = a.cols();
  const std::size_t n = b.cols();
  prepare_out(out, m, n, accumulate);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    const double* __restrict bi = b.row(i);
    for (std::size_t k = 0; k < m; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      double* __restrict o = out.row(k);
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * bi[j];
    }
  }
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  if (!x.same_shape(y)) shape_fail("axpy", x, y);
  const double* xs = x.data();
  double* ys = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) ys[i] += alpha * xs[i];
}

}  // namespace mw::nn
