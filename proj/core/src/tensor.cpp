#include "sid/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace sid {

std::string to_string(Shape s) {
  return "(" + std::to_string(s.rows) + ", " + std::to_string(s.cols) + ")";
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw NonFiniteError("tensor fill value is not finite");
}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + to_string({rows, cols}));
  }
  check_finite();
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor(1, values.size(), std::vector<double>(values));
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw ShapeError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(n, m, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) {
    throw ShapeError("item() requires a 1x1 tensor, got " + to_string(shape()));
  }
  return data_[0];
}

Tensor Tensor::slice_rows(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw ShapeError("slice_rows out of range");
  std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                          data_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_));
  return Tensor(count, cols_, std::move(out));
}

void Tensor::check_finite(const std::string& what) const {
  if (!all_finite(data_)) throw NonFiniteError(what + " contains non-finite values");
}

Tensor vstack(std::span<const Tensor> parts) {
  if (parts.empty()) return {};
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ShapeError("vstack: column mismatch");
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
  return Tensor(rows, cols, std::move(data));
}

}  // namespace sid
