#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dualmem/transition.hpp"

namespace dualmem {

struct EnvSpec {
  std::size_t obs_dim = 0;
  std::size_t action_count = 0;
  std::size_t max_episode_steps = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminal = false;   // the episode ended in an absorbing state
  bool truncated = false;  // the step limit was reached

  bool done() const { return terminal || truncated; }
};

/// Discrete-action episodic environment. Implementations are deterministic
/// given the reset seed and the action sequence.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvSpec spec() const = 0;
  virtual Observation reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::size_t action) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

/// 5x5 grid, start (0, 0), goal (4, 4). Actions up/down/left/right move the
/// (row, col) position; walls clamp. Every step costs 0.01 except the one
/// reaching the goal, which pays 1.0 and ends the episode.
class GridWorld final : public Environment {
 public:
  static constexpr int kSize = 5;
  static constexpr std::size_t kMaxSteps = 200;
  static constexpr double kStepReward = -0.01;
  static constexpr double kGoalReward = 1.0;
  enum Action : std::size_t { Up = 0, Down = 1, Left = 2, Right = 3 };

  EnvSpec spec() const override { return {2, 4, kMaxSteps}; }

  Observation reset(std::uint64_t /*seed*/) override {
    row_ = 0;
    col_ = 0;
    steps_ = 0;
    done_ = false;
    return observe();
  }

  StepResult step(std::size_t action) override {
    if (done_) throw std::logic_error("episode finished");
    if (action >= 4) throw std::out_of_range("action index out of range");
    switch (action) {
      case Up: row_ = std::max(row_ - 1, 0); break;
      case Down: row_ = std::min(row_ + 1, kSize - 1); break;
      case Left: col_ = std::max(col_ - 1, 0); break;
      case Right: col_ = std::min(col_ + 1, kSize - 1); break;
    }
    ++steps_;
    StepResult r;
    r.terminal = row_ == kSize - 1 && col_ == kSize - 1;
    r.reward = r.terminal ? kGoalReward : kStepReward;
    r.truncated = !r.terminal && steps_ >= kMaxSteps;
    r.observation = observe();
    done_ = r.done();
    return r;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<GridWorld>(*this); }

  void place(int row, int col) {
    if (row < 0 || row >= kSize || col < 0 || col >= kSize) throw std::out_of_range("cell outside the grid");
    row_ = row;
    col_ = col;
    done_ = false;
  }
  int row() const { return row_; }
  int col() const { return col_; }

 private:
  Observation observe() const { return {row_ / 4.0, col_ / 4.0}; }

  int row_ = 0;
  int col_ = 0;
  std::size_t steps_ = 0;
  bool done_ = false;
};

/// Cart-pole balancing with explicit Euler integration. State and observation
/// are (x, x_dot, theta, theta_dot). Action 0 pushes left, 1 pushes right.
class CartPole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kForce = 10.0;
  static constexpr double kDt = 0.02;
  static constexpr double kXLimit = 2.4;
  static constexpr double kThetaLimit = 12.0 * std::numbers::pi / 180.0;
  static constexpr std::size_t kMaxSteps = 500;

  using State = std::array<double, 4>;

  EnvSpec spec() const override { return {4, 2, kMaxSteps}; }

  Observation reset(std::uint64_t seed) override {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> init(-0.05, 0.05);
    for (double& v : state_) v = init(rng);
    steps_ = 0;
    done_ = false;
    return observe();
  }

  StepResult step(std::size_t action) override {
    if (done_) throw std::logic_error("episode finished");
    if (action >= 2) throw std::out_of_range("action index out of range");
    state_ = integrate(state_, action == 1 ? kForce : -kForce);
    ++steps_;
    StepResult r;
    r.reward = 1.0;
    r.terminal = std::abs(state_[0]) > kXLimit || std::abs(state_[2]) > kThetaLimit;
    r.truncated = !r.terminal && steps_ >= kMaxSteps;
    r.observation = observe();
    done_ = r.done();
    return r;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<CartPole>(*this); }

  /// One Euler step of the cart-pole dynamics under horizontal force.
  static State integrate(const State& s, double force) {
    const auto [x, x_dot, theta, theta_dot] = s;
    constexpr double total_mass = kCartMass + kPoleMass;
    constexpr double pole_moment = kPoleMass * kHalfLength;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double temp = (force + pole_moment * theta_dot * theta_dot * sin_t) / total_mass;
    const double theta_acc =
        (kGravity * sin_t - cos_t * temp) / (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_moment * theta_acc * cos_t / total_mass;
    return {x + kDt * x_dot, x_dot + kDt * x_acc, theta + kDt * theta_dot, theta_dot + kDt * theta_acc};
  }

  void set_state(const State& s) {
    state_ = s;
    done_ = false;
  }
  const State& state() const { return state_; }

 private:
  Observation observe() const { return {state_.begin(), state_.end()}; }

  State state_{};
  std::size_t steps_ = 0;
  bool done_ = false;
};

inline std::unique_ptr<Environment> make_environment(std::string_view name) {
  if (name == "gridworld") return std::make_unique<GridWorld>();
  if (name == "cartpole") return std::make_unique<CartPole>();
  throw std::invalid_argument("unknown environment '" + std::string(name) + "' (expected gridworld or cartpole)");
}

}  // namespace dualmem
