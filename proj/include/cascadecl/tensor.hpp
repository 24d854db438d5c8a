#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cascadecl {

/// Dense row-major matrix of doubles. Values are finite by construction.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Throws NonFiniteInput on NaN/Inf and ShapeMismatch when data.size() != rows*cols.
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor2 identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool requires_grad() const { return requires_grad_; }
  Tensor2& set_requires_grad(bool on) {
    requires_grad_ = on;
    return *this;
  }

  bool same_shape(const Tensor2& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  bool requires_grad_ = false;
};

void require_finite(std::span<const double> values, const char* what);

}  // namespace cascadecl
