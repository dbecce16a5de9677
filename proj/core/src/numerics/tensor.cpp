#include "victr/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "victr/errors.hpp"

namespace victr {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

std::size_t trailing(const Shape& shape) {
  if (shape.empty()) return 1;
  return std::accumulate(shape.begin() + 1, shape.end(), std::size_t{1}, std::multiplies<>{});
}

void validate_shape(const Shape& shape) {
  for (std::size_t i = 1; i < shape.size(); ++i) {
    if (shape[i] == 0) throw ShapeError("tensor extents must be positive: " + shape_to_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_numel(shape_), fill), cols_(trailing(shape_)) {
  validate_shape(shape_);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)), cols_(trailing(shape_)) {
  validate_shape(shape_);
  if (values_.size() != shape_numel(shape_)) {
    throw ShapeError("value count " + std::to_string(values_.size()) + " does not match shape " +
                     shape_to_string(shape_));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, value); }

std::size_t Tensor::rows() const noexcept { return shape_.empty() ? 1 : shape_[0]; }

std::size_t Tensor::cols() const noexcept { return cols_; }

void Tensor::fill(double value) noexcept { std::fill(values_.begin(), values_.end(), value); }

void Tensor::reshape(Shape shape) {
  validate_shape(shape);
  if (shape_numel(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  shape_ = std::move(shape);
  cols_ = trailing(shape_);
}

void Tensor::check_finite(std::string_view what) const {
  // v * 0 is NaN exactly when v is NaN or infinite; one branch per tensor.
  double probe = 0.0;
  for (double v : values_) probe += v * 0.0;
  if (probe == probe) return;
  throw NonFiniteError("non-finite value in " + std::string(what));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows column mismatch");
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return Tensor({rows, cols}, std::move(out));
}

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end) {
  if (begin > end || end > t.rows()) throw ShapeError("slice_rows out of range");
  const auto cols = t.cols();
  std::vector<double> out(t.values().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                          t.values().begin() + static_cast<std::ptrdiff_t>(end * cols));
  return Tensor({end - begin, cols}, std::move(out));
}

}  // namespace victr
