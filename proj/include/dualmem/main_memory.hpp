#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dualmem/transition.hpp"

namespace dualmem {

/// Fixed-capacity FIFO ring buffer kept in insertion-time order.
///
/// Logical index 0 is the oldest stored transition and `size() - 1` the
/// newest. Once full, every push overwrites the oldest element.
class MainMemory {
 public:
  explicit MainMemory(std::size_t capacity) : slots_(capacity) {
    if (capacity == 0) throw std::invalid_argument("main memory capacity must be positive");
  }

  void push(Transition tr) {
    const std::size_t cap = slots_.size();
    if (count_ < cap) {
      slots_[(head_ + count_) % cap] = std::move(tr);
      ++count_;
    } else {
      slots_[head_] = std::move(tr);
      head_ = (head_ + 1) % cap;
    }
  }

  const Transition& at(std::size_t logical) const { return slots_[physical(logical)]; }
  Transition& at(std::size_t logical) { return slots_[physical(logical)]; }

  std::size_t size() const { return count_; }
  std::size_t capacity() const { return slots_.size(); }
  bool empty() const { return count_ == 0; }
  bool full() const { return count_ == slots_.size(); }

  void clear() {
    head_ = 0;
    count_ = 0;
  }

 private:
  std::size_t physical(std::size_t logical) const {
    if (logical >= count_) throw std::out_of_range("main memory index out of range");
    return (head_ + logical) % slots_.size();
  }

  std::vector<Transition> slots_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

/// Half-open range [begin, end) of logical main-memory indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Splits logical indices [0, count) into `subsets` contiguous time-ordered
/// ranges whose sizes differ by at most one. When `subsets` divides `count`
/// every range holds exactly count / subsets elements.
inline std::vector<IndexRange> subset_bounds(std::size_t count, std::ptrdiff_t subsets) {
  if (subsets <= 0) throw std::invalid_argument("invalid subset count");
  const auto t = static_cast<std::size_t>(subsets);
  if (t > count) throw std::invalid_argument("insufficient data for stratification");

  std::vector<IndexRange> ranges;
  ranges.reserve(t);
  for (std::size_t j = 0; j < t; ++j) {
    ranges.push_back({j * count / t, (j + 1) * count / t});
  }
  return ranges;
}

/// One uniformly drawn logical index per range of subset_bounds(count, subsets).
template <class Rng>
std::vector<std::size_t> stratified_indices(std::size_t count, std::ptrdiff_t subsets, Rng& rng) {
  const auto ranges = subset_bounds(count, subsets);
  std::vector<std::size_t> picks;
  picks.reserve(ranges.size());
  for (const auto& r : ranges) {
    std::uniform_int_distribution<std::size_t> pick(r.begin, r.end - 1);
    picks.push_back(pick(rng));
  }
  return picks;
}

/// Copies one uniformly drawn transition from each time-ordered subset of the
/// memory. The memory itself is left untouched.
template <class Rng>
std::vector<Transition> sample_time_stratified(const MainMemory& mem, std::ptrdiff_t subsets, Rng& rng) {
  std::vector<Transition> out;
  for (std::size_t i : stratified_indices(mem.size(), subsets, rng)) out.push_back(mem.at(i));
  return out;
}

}  // namespace dualmem
