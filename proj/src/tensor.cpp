#include "foaa/tensor.hpp"

#include <cmath>
#include <sstream>

#include "foaa/errors.hpp"

namespace foaa {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
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

void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (shape_numel(shape_) != data_.size())
    throw DimensionError("shape " + shape_to_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel())
    throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) {
  for (auto& x : data_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("max_abs_diff: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}


}  // namespace foaa
