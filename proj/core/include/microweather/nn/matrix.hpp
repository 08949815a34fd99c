#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace mw::nn {

/// Dense row-major float64 matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> data);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] double* data() noexcept { return data_.data(); }
  [[nodiscard]] const double* data() const noexcept { return data_.data(); }
  [[nodiscard]] std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

  [[nodiscard]] double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  [[nodiscard]] double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  [[nodiscard]] double* row(std::size_t r) noexcept { return data_.data() + r * cols_; }
  [[nodiscard]] const double* row(std::size_t r) const noexcept { return data_.data() + r * cols_; }

  [[nodiscard]] bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  void fill(double v) noexcept;
  void resize(std::size_t rows, std::size_t cols, double fill = 0.0);
  [[nodiscard]] Matrix transposed() const;
  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// The kernels below compute each output row from the matching input row only, with a fixed
// summation order. Results for one row are therefore bitwise independent of how many rows are
// processed together, which tiled inference relies on.

/// out = a * b, or out += a * b when accumulate is set.
void gemm(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate = false);
/// out = a * b^T (or +=).
void gemm_bt(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate = false);
/// out = a^T * b (or +=).
void gemm_at(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate = false);

/// y += alpha * x (same shape).
void axpy(double alpha, const Matrix& x, Matrix& y);

}  // namespace mw::nn
