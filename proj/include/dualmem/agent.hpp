#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dualmem/q_network.hpp"
#include "dualmem/transition.hpp"

namespace dualmem {

struct AgentConfig {
  double gamma = 0.99;
  double learning_rate = 1e-2;
  std::size_t batch_size = 32;
  std::size_t target_sync_interval = 500;  // training steps
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::size_t epsilon_decay_steps = 10'000;  // environment steps
  double grad_clip_norm = 10.0;               // <= 0 disables clipping
  std::vector<std::size_t> hidden = {64, 64};

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (target_sync_interval == 0) throw std::invalid_argument("target_sync_interval must be positive");
    if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start && epsilon_start <= 1.0))
      throw std::invalid_argument("epsilon schedule must satisfy 0 <= end <= start <= 1");
  }

  /// Linear decay from epsilon_start to epsilon_end, then constant.
  double epsilon_at(std::size_t step) const {
    if (epsilon_decay_steps == 0 || step >= epsilon_decay_steps) return epsilon_end;
    const double frac = static_cast<double>(step) / static_cast<double>(epsilon_decay_steps);
    return std::clamp(epsilon_start + frac * (epsilon_end - epsilon_start), epsilon_end, epsilon_start);
  }
};

inline double huber(double x) {
  const double a = std::abs(x);
  return a <= 1.0 ? 0.5 * x * x : a - 0.5;
}

inline double huber_derivative(double x) { return std::clamp(x, -1.0, 1.0); }

inline std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

/// r + gamma * max_a Q_target(s', a) * (1 - terminal) - Q(s, a) per transition.
inline std::vector<double> td_errors(const QNetwork& net, const QNetwork& target_net,
                                     std::span<const Transition> batch, double gamma) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  std::vector<double> deltas;
  deltas.reserve(batch.size());
  for (const auto& tr : batch) {
    const auto q = net.forward(tr.state);
    if (tr.action >= q.size()) throw std::invalid_argument("action index out of range");
    double target = tr.reward;
    if (!tr.terminal) {
      const auto next_q = target_net.forward(tr.next_state);
      target += gamma * *std::max_element(next_q.begin(), next_q.end());
    }
    deltas.push_back(target - q[tr.action]);
  }
  return deltas;
}

/// With probability epsilon a uniform action, otherwise the greedy action with
/// ties broken toward the lowest index.
template <class Rng>
std::size_t act_epsilon_greedy(const QNetwork& net, std::span<const double> state, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, net.output_dim() - 1);
    return pick(rng);
  }
  return argmax(net.forward(state));
}

struct LossAndGradients {
  double loss = 0.0;
  std::vector<double> td_errors;
  NetworkGradients gradients;
};

/// Loss mean_i w_i * huber(delta_i) and its gradient w.r.t. the online
/// network. Bootstrap targets come from `target_net` and are held constant.
inline LossAndGradients weighted_td_loss(const QNetwork& net, const QNetwork& target_net,
                                         std::span<const Transition> batch, std::span<const double> weights,
                                         double gamma) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (batch.size() != weights.size()) throw std::invalid_argument("batch and importance weights differ in length");

  LossAndGradients out;
  out.gradients = net.zero_gradients();
  out.td_errors.reserve(batch.size());
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> output_grad(net.output_dim(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& tr = batch[i];
    const auto trace = net.trace(tr.state);
    const auto& q = trace.output();
    if (tr.action >= q.size()) throw std::invalid_argument("action index out of range");
    double target = tr.reward;
    if (!tr.terminal) {
      const auto next_q = target_net.forward(tr.next_state);
      target += gamma * *std::max_element(next_q.begin(), next_q.end());
    }
    const double delta = target - q[tr.action];
    out.td_errors.push_back(delta);
    out.loss += weights[i] * huber(delta) * inv_n;

    // d/dQ of huber(target - Q) is -huber'(delta)
    const double g = -weights[i] * huber_derivative(delta) * inv_n;
    if (g == 0.0) continue;
    std::fill(output_grad.begin(), output_grad.end(), 0.0);
    output_grad[tr.action] = g;
    net.backward(trace, output_grad, out.gradients);
  }
  return out;
}

struct TrainResult {
  double loss = 0.0;
  std::vector<double> td_errors;  // before the update
};

/// DQN learner: online network, target network, SGD with norm clipping.
class DqnAgent {
 public:
  template <class Rng>
  DqnAgent(std::size_t obs_dim, std::size_t action_count, AgentConfig config, Rng& rng) : config_(std::move(config)) {
    config_.validate();
    std::vector<std::size_t> sizes{obs_dim};
    sizes.insert(sizes.end(), config_.hidden.begin(), config_.hidden.end());
    sizes.push_back(action_count);
    online_ = QNetwork(sizes);
    online_.initialize(rng);
    target_ = online_;
  }

  DqnAgent(QNetwork online, AgentConfig config) : config_(std::move(config)), online_(std::move(online)) {
    config_.validate();
    target_ = online_;
  }

  TrainResult train_step(std::span<const Transition> batch, std::span<const double> is_weights) {
    if (batch.size() != config_.batch_size || is_weights.size() != config_.batch_size)
      throw std::invalid_argument("batch and weights must both hold batch_size items");
    auto lg = weighted_td_loss(online_, target_, batch, is_weights, config_.gamma);
    if (!std::isfinite(lg.loss)) throw std::runtime_error("diverged");

    if (config_.grad_clip_norm > 0.0) {
      const double norm = std::sqrt(lg.gradients.squared_norm());
      if (norm > config_.grad_clip_norm) lg.gradients.scale(config_.grad_clip_norm / norm);
    }
    online_.apply(lg.gradients, config_.learning_rate);
    if (!online_.finite()) throw std::runtime_error("diverged");

    if (++train_steps_ % config_.target_sync_interval == 0) sync_target();
    return {lg.loss, std::move(lg.td_errors)};
  }

  void sync_target() { target_ = online_; }

  template <class Rng>
  std::size_t act(std::span<const double> state, double epsilon, Rng& rng) const {
    return act_epsilon_greedy(online_, state, epsilon, rng);
  }

  const QNetwork& online() const { return online_; }
  QNetwork& online() { return online_; }
  const QNetwork& target() const { return target_; }
  const AgentConfig& config() const { return config_; }
  std::size_t train_steps() const { return train_steps_; }

 private:
  AgentConfig config_;
  QNetwork online_;
  QNetwork target_;
  std::size_t train_steps_ = 0;
};

}  // namespace dualmem
