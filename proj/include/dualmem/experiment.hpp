#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualmem/agent.hpp"
#include "dualmem/config.hpp"
#include "dualmem/dual_memory.hpp"
#include "dualmem/envs.hpp"

namespace dualmem {

inline constexpr double kEvalEpsilon = 0.01;
inline constexpr std::size_t kTrainReturnWindow = 100;

/// Independent generator for one purpose (`stream`) of one seeded run.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

/// Mean undiscounted return of `episodes` episodes. Episode i resets the
/// environment and the policy's generator with seed + i.
/// `policy(observation, rng)` returns an action.
template <class Policy>
double evaluate_policy(Policy&& policy, Environment& env, std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) throw std::invalid_argument("evaluation needs at least one episode");
  double sum = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    std::mt19937_64 rng(seed + i);
    Observation obs = env.reset(seed + i);
    double ret = 0.0;
    for (;;) {
      const auto r = env.step(policy(static_cast<const Observation&>(obs), rng));
      ret += r.reward;
      if (r.done()) break;
      obs = r.observation;
    }
    sum += ret;
  }
  return sum / static_cast<double>(episodes);
}

inline double evaluate(const DqnAgent& agent, Environment& env, std::size_t episodes, std::uint64_t seed,
                       double epsilon = kEvalEpsilon) {
  return evaluate_policy(
      [&](const Observation& obs, std::mt19937_64& rng) { return agent.act(obs, epsilon, rng); }, env, episodes,
      seed);
}

struct MetricsRow {
  std::size_t step = 0;
  std::size_t episodes = 0;
  double train_return_mean100 = 0.0;
  double test_return_mean = 0.0;
  double wall_clock_s = 0.0;
  double refresh_time_mean_us = 0.0;
  std::size_t cache_count = 0;
  std::size_t main_count = 0;
};

inline constexpr const char* kMetricsHeader =
    "step,episodes,train_return_mean100,test_return_mean,wall_clock_s,refresh_time_mean_us,cache_count,main_count";

inline std::string format_metrics_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.6f,%.3f,%.3f,%zu,%zu", r.step, r.episodes, r.train_return_mean100,
                r.test_return_mean, r.wall_clock_s, r.refresh_time_mean_us, r.cache_count, r.main_count);
  return buf;
}

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) os << format_metrics_row(r) << '\n';
}

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_metrics_csv(os, rows);
}

struct RunSummary {
  std::vector<MetricsRow> rows;
  std::size_t cadence_points = 0;  // environment steps divisible by n
  std::size_t refreshes = 0;
  std::size_t skipped_refreshes = 0;  // main memory still below t
  std::size_t training_steps = 0;
  std::size_t skipped_training = 0;  // warm-up gate not yet open
  std::size_t episodes = 0;
  double wall_clock_s = 0.0;
  QNetwork network;  // final online network
};

struct RunHooks {
  std::function<void(std::size_t step, const RefreshReport&)> on_refresh;
  std::function<void(std::size_t step, const ReplayMemory&)> on_step;
};

/// Trains one DQN agent against one memory configuration and records a
/// metrics row every eval_interval environment steps.
///
/// Every n environment steps: refresh the cache (dual memory only, once the
/// main memory holds t items), then, once the sampled memory holds
/// batch_size items and the main memory max(t, batch_size), one minibatch
/// training step followed by priority write-back.
inline RunSummary run_experiment(const ExperimentConfig& cfg, const RunHooks& hooks = {}) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();

  auto env = make_environment(cfg.env);
  auto eval_env = env->clone();
  const EnvSpec spec = env->spec();
  const AgentConfig agent_cfg = cfg.resolved_agent();

  auto init_rng = make_rng(cfg.seed, 1);
  auto act_rng = make_rng(cfg.seed, 2);
  auto memory_rng = make_rng(cfg.seed, 3);
  auto episode_seeds = make_rng(cfg.seed, 4);

  DqnAgent agent(spec.obs_dim, spec.action_count, agent_cfg, init_rng);
  ReplayMemory memory(cfg.policy(), cfg.priority);
  const bool dual = cfg.mode == MemoryMode::DualDMS;
  const std::size_t main_gate = dual ? std::max(cfg.t, agent_cfg.batch_size) : agent_cfg.batch_size;

  RunSummary summary;
  std::deque<double> recent_returns;
  double episode_return = 0.0;
  double refresh_us_sum = 0.0;
  std::size_t refresh_us_count = 0;

  Observation obs = env->reset(episode_seeds());
  for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
    const std::size_t action = agent.act(obs, agent_cfg.epsilon_at(step - 1), act_rng);
    auto result = env->step(action);
    episode_return += result.reward;
    memory.ingest(Transition{obs, action, result.reward, result.observation, result.terminal}, memory_rng);
    if (result.done()) {
      recent_returns.push_back(episode_return);
      if (recent_returns.size() > kTrainReturnWindow) recent_returns.pop_front();
      ++summary.episodes;
      episode_return = 0.0;
      obs = env->reset(episode_seeds());
    } else {
      obs = std::move(result.observation);
    }

    if (step % cfg.n == 0) {
      ++summary.cadence_points;
      if (dual) {
        if (memory.main_count() >= cfg.t) {
          const auto t0 = clock::now();
          const auto report = memory.refresh_cache(memory_rng);
          refresh_us_sum += std::chrono::duration<double, std::micro>(clock::now() - t0).count();
          ++refresh_us_count;
          ++summary.refreshes;
          if (hooks.on_refresh) hooks.on_refresh(step, report);
        } else {
          memory.discard_pending();
          ++summary.skipped_refreshes;
        }
      }
      if (memory.trainable_count() >= agent_cfg.batch_size && memory.main_count() >= main_gate) {
        const auto batch = memory.sample_minibatch(agent_cfg.batch_size, memory_rng);
        const auto trained = agent.train_step(batch.transitions, batch.weights);
        memory.update_priorities(batch.handles, trained.td_errors);
        ++summary.training_steps;
      } else {
        ++summary.skipped_training;
      }
    }
    if (hooks.on_step) hooks.on_step(step, memory);

    if (step % cfg.eval_interval == 0) {
      MetricsRow row;
      row.step = step;
      row.episodes = summary.episodes;
      if (!recent_returns.empty())
        row.train_return_mean100 = std::accumulate(recent_returns.begin(), recent_returns.end(), 0.0) /
                                   static_cast<double>(recent_returns.size());
      row.test_return_mean = evaluate(agent, *eval_env, cfg.eval_episodes, cfg.seed * 1'000'003ULL + step);
      row.wall_clock_s = std::chrono::duration<double>(clock::now() - started).count();
      row.refresh_time_mean_us = refresh_us_count ? refresh_us_sum / static_cast<double>(refresh_us_count) : 0.0;
      refresh_us_sum = 0.0;
      refresh_us_count = 0;
      row.cache_count = memory.cache_count();
      row.main_count = memory.main_count();
      summary.rows.push_back(row);
    }
  }

  summary.wall_clock_s = std::chrono::duration<double>(clock::now() - started).count();
  summary.network = agent.online();
  if (!cfg.output.empty()) write_metrics_csv(cfg.output, summary.rows);
  return summary;
}

}  // namespace dualmem
