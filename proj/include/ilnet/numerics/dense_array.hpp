#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ilnet {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Row-major array of 64-bit floats. Every dimension is positive.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(Shape shape, double fill = 0.0);
  DenseArray(Shape shape, std::vector<double> data);

  static DenseArray scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Size of the innermost axis (1 for rank-0 arrays).
  std::size_t last_dim() const { return shape_.empty() ? 1 : shape_.back(); }
  /// Number of innermost-axis rows.
  std::size_t rows() const { return data_.size() / last_dim(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* ptr() { return data_.data(); }
  const double* ptr() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Value of a single-element array.
  double item() const;

  /// Reinterpret with a new shape of equal element count.
  void reshape(Shape shape);
  void fill(double value);
  bool all_finite() const;

  bool operator==(const DenseArray& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace ilnet
