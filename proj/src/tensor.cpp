#include "cascadecl/tensor.hpp"

#include <cmath>
#include <string>

#include "cascadecl/error.hpp"

namespace cascadecl {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains NaN/Inf");
  }
}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw Error(ErrorCode::NonFiniteInput, "non-finite fill value");
}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(data_.size()) + " values for a " +
                                              std::to_string(rows_) + "x" + std::to_string(cols_) +
                                              " tensor");
  }
  require_finite(data_, "tensor");
}

Tensor2 Tensor2::identity(std::size_t n) {
  Tensor2 t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

}  // namespace cascadecl
