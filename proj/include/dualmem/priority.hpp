#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dualmem/sum_tree.hpp"

namespace dualmem {

struct PriorityParams {
  double alpha = 0.6;         // prioritization strength
  double beta = 0.4;          // importance-sampling correction, held constant
  double epsilon = 0.01;      // floor added to |TD error|
  double alpha_remove = 1.0;  // inverse-priority strength for stochastic removal

  void validate() const {
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
    if (!(epsilon > 0.0)) throw std::invalid_argument("priority epsilon must be positive");
    if (!(alpha_remove >= 0.0)) throw std::invalid_argument("alpha_remove must be >= 0");
  }
};

/// |delta| + epsilon. The alpha exponent is applied separately when the value
/// is written into a tree (see stored_priority).
inline double priority_from_td(double delta, const PriorityParams& params) {
  if (!std::isfinite(delta)) throw std::invalid_argument("non-finite TD error");
  return std::abs(delta) + params.epsilon;
}

/// Leaf value written into a sum tree: (|delta| + epsilon)^alpha.
inline double stored_priority(double delta, const PriorityParams& params) {
  return std::pow(priority_from_td(delta, params), params.alpha);
}

struct PerSample {
  std::vector<std::size_t> indices;
  std::vector<double> weights;
};

namespace detail {

template <class Rng>
double uniform_below(double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, hi);
  const double u = dist(rng);
  return u < hi ? u : std::nextafter(hi, 0.0);
}

}  // namespace detail

/// Proportional prioritized sampling.
///
/// [0, total) is cut into `batch` equal segments and one point is drawn
/// uniformly inside each, so every batch covers the whole priority mass.
/// Weights are (N * P(i))^-beta with N the number of occupied leaves,
/// rescaled so the batch maximum is exactly 1.
template <class Rng>
PerSample per_sample(const SumTree& tree, std::size_t batch, double beta, Rng& rng) {
  if (batch == 0) throw std::invalid_argument("batch size must be positive");
  const double total = tree.total();
  if (!(total > 0.0)) throw std::runtime_error("empty priority mass");

  PerSample out;
  out.indices.reserve(batch);
  out.weights.reserve(batch);
  const double segment = total / static_cast<double>(batch);
  const auto occupied = static_cast<double>(tree.occupied());
  double max_weight = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double lo = segment * static_cast<double>(i);
    double u = lo + detail::uniform_below(segment, rng);
    if (u >= total) u = std::nextafter(total, 0.0);
    const std::size_t idx = tree.find_prefix(u);
    const double prob = tree.leaf(idx) / total;
    const double w = std::pow(occupied * prob, -beta);
    out.indices.push_back(idx);
    out.weights.push_back(w);
    max_weight = std::max(max_weight, w);
  }
  for (double& w : out.weights) w /= max_weight;
  return out;
}

/// Picks k distinct indices to remove, sequentially without replacement, each
/// draw proportional to priority^-alpha_remove among the remaining items.
/// Low-priority items are the likeliest to go. Cost is linear in the number
/// of priorities.
template <class Rng>
std::vector<std::size_t> psmm_select_removals(std::span<const double> priorities, std::size_t k,
                                              double alpha_remove, Rng& rng) {
  if (k > priorities.size()) throw std::invalid_argument("cannot remove more items than are stored");
  if (k == 0) return {};

  std::vector<double> removal_weight(priorities.size());
  for (std::size_t i = 0; i < priorities.size(); ++i) {
    const double p = priorities[i];
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("priorities must be finite and positive");
    removal_weight[i] = alpha_remove == 1.0 ? 1.0 / p : std::pow(p, -alpha_remove);
  }

  std::vector<std::size_t> picked;
  picked.reserve(k);
  if (k == 1) {
    // single draw: plain cumulative scan, no tree needed
    double total = 0.0;
    for (double w : removal_weight) total += w;
    const double u = detail::uniform_below(total, rng);
    double acc = 0.0;
    std::size_t idx = removal_weight.size() - 1;
    for (std::size_t i = 0; i < removal_weight.size(); ++i) {
      acc += removal_weight[i];
      if (u < acc) {
        idx = i;
        break;
      }
    }
    picked.push_back(idx);
    return picked;
  }

  SumTree tree(removal_weight.size());
  tree.assign(removal_weight);
  for (std::size_t draw = 0; draw < k; ++draw) {
    const std::size_t idx = tree.find_prefix(detail::uniform_below(tree.total(), rng));
    picked.push_back(idx);
    tree.update(idx, 0.0);
  }
  return picked;
}

}  // namespace dualmem
