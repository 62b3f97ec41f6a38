// SPDX-License-Identifier: Apache-2.0
/**
 * @file   tensor.hpp
 * @brief  Dense row-major double tensor used throughout the library.
 */

#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace padcheck {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape &shape);
std::string shape_to_string(const Shape &shape);

/**
 * Row-major tensor of doubles.
 *
 * The element count always equals the product of the shape, and every
 * value is finite; both are checked on construction. Element access after
 * construction is unchecked in release builds.
 */
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor filled(Shape shape, double value);

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double &operator[](std::size_t i) { return data_[i]; }

  double at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double &at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }

  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double &at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Row `i` of a rank-2 tensor, or the trailing vector at (i, j) of rank 3.
  std::span<const double> row(std::size_t i) const;
  std::span<double> row(std::size_t i);
  std::span<const double> row(std::size_t i, std::size_t j) const;
  std::span<double> row(std::size_t i, std::size_t j);

  /// Throws if any value is NaN or infinite.
  void check_finite() const;

  bool operator==(const Tensor &other) const = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

/// Largest |a - b| over all elements; shapes must match.
double max_abs_diff(const Tensor &a, const Tensor &b);

// Binary "PGT1" format: magic, rank (u64 LE), dims (u64 LE each), f64 LE payload.
void write_tensor(std::ostream &out, const Tensor &t);
Tensor read_tensor(std::istream &in);
void save_tensor(const std::string &path, const Tensor &t);
Tensor load_tensor(const std::string &path);

} // namespace padcheck
