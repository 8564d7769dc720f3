#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace dualmem {

/// Complete binary tree over non-negative leaf priorities.
///
/// Internal nodes hold the sum and the maximum of their children, so total(),
/// max() are O(1) and update(), find_prefix() are O(log n). The leaf count is
/// rounded up to a power of two; padding leaves stay at zero.
class SumTree {
 public:
  explicit SumTree(std::size_t leaf_capacity)
      : capacity_(leaf_capacity), width_(std::bit_ceil(std::max<std::size_t>(leaf_capacity, 1))),
        sum_(2 * width_, 0.0), max_(2 * width_, 0.0) {
    if (leaf_capacity == 0) throw std::invalid_argument("sum tree capacity must be positive");
  }

  std::size_t leaf_capacity() const { return capacity_; }

  void update(std::size_t leaf, double value) {
    if (leaf >= capacity_) throw std::out_of_range("sum tree leaf index out of range");
    if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("priority must be finite and non-negative");
    std::size_t node = width_ + leaf;
    if (sum_[node] > 0.0) --occupied_;
    if (value > 0.0) ++occupied_;
    sum_[node] = value;
    max_[node] = value;
    for (node /= 2; node >= 1; node /= 2) pull(node);
  }

  /// Replaces every leaf at once in O(n). Leaves past values.size() become zero.
  void assign(std::span<const double> values) {
    if (values.size() > capacity_) throw std::out_of_range("too many values for sum tree");
    occupied_ = 0;
    for (std::size_t i = 0; i < width_; ++i) {
      const double v = i < values.size() ? values[i] : 0.0;
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("priority must be finite and non-negative");
      if (v > 0.0) ++occupied_;
      sum_[width_ + i] = v;
      max_[width_ + i] = v;
    }
    for (std::size_t node = width_ - 1; node >= 1; --node) pull(node);
  }

  double leaf(std::size_t i) const {
    if (i >= capacity_) throw std::out_of_range("sum tree leaf index out of range");
    return sum_[width_ + i];
  }

  std::span<const double> leaves() const { return {sum_.data() + width_, capacity_}; }

  double total() const { return sum_[1]; }
  double max() const { return max_[1]; }

  /// Number of leaves with strictly positive priority.
  std::size_t occupied() const { return occupied_; }

  /// Leaf j such that prefix(j) <= u < prefix(j) + leaf(j). Zero-priority
  /// leaves are never returned, even when rounding pushes u onto a boundary.
  std::size_t find_prefix(double u) const {
    if (!(total() > 0.0)) throw std::runtime_error("empty priority mass");
    if (!(u >= 0.0 && u < total())) throw std::out_of_range("prefix value outside [0, total)");
    std::size_t node = 1;
    while (node < width_) {
      const std::size_t left = 2 * node;
      if (u < sum_[left] || !(sum_[left + 1] > 0.0)) {
        node = left;
      } else {
        u -= sum_[left];
        node = left + 1;
      }
    }
    return node - width_;
  }

  /// True when every internal node equals the sum of its children within
  /// `rel_tol` relative error and every maximum is exact.
  bool consistent(double rel_tol = 1e-9) const {
    for (std::size_t node = 1; node < width_; ++node) {
      const double s = sum_[2 * node] + sum_[2 * node + 1];
      if (std::abs(sum_[node] - s) > rel_tol * std::max(1.0, std::abs(s))) return false;
      if (max_[node] != std::max(max_[2 * node], max_[2 * node + 1])) return false;
    }
    return true;
  }

 private:
  void pull(std::size_t node) {
    sum_[node] = sum_[2 * node] + sum_[2 * node + 1];
    max_[node] = std::max(max_[2 * node], max_[2 * node + 1]);
  }

  std::size_t capacity_;
  std::size_t width_;
  std::vector<double> sum_;
  std::vector<double> max_;
  std::size_t occupied_ = 0;
};

}  // namespace dualmem
