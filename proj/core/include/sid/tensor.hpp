#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sid {

/// Raised when a tensor would hold a NaN or infinity.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on incompatible shapes.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(Shape s);

/// Dense row-major rank-2 array of doubles. Rank-1 data is a single row or
/// column; a batch of vectors is one row per sample.
///
/// Every constructor rejects non-finite entries. Element writes through
/// `data()` or `operator()` are unchecked; call `check_finite()` afterwards
/// when the values come from arithmetic that may overflow.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor row(std::initializer_list<double> values);
  static Tensor row(std::span<const double> values);
  static Tensor column(std::span<const double> values);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  Shape shape() const { return {rows_, cols_}; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row_span(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> to_vector() const { return data_; }

  /// Single-element value; throws unless the tensor is 1x1.
  double item() const;

  /// Copies rows [first, first + count).
  Tensor slice_rows(std::size_t first, std::size_t count) const;

  /// Throws NonFiniteError naming `what` if any entry is NaN or infinite.
  void check_finite(const std::string& what = "tensor") const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

bool all_finite(std::span<const double> values);

/// Stacks tensors with equal column counts vertically.
Tensor vstack(std::span<const Tensor> parts);

}  // namespace sid
