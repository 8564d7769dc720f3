#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dualmem/agent.hpp"
#include "dualmem/dual_memory.hpp"
#include "dualmem/priority.hpp"

namespace dualmem {

struct ExperimentConfig {
  std::string env = "gridworld";
  MemoryMode mode = MemoryMode::DualDMS;
  std::size_t main_capacity = 8000;  // the single buffer's capacity in the single modes
  std::size_t cache_capacity = 2000;
  std::size_t t = 16;
  std::size_t n = 4;
  std::size_t total_steps = 50'000;
  std::size_t eval_interval = 1000;
  std::size_t eval_episodes = 10;
  std::uint64_t seed = 0;
  AgentConfig agent;
  std::optional<std::size_t> epsilon_decay_steps;  // unset: first 20% of total_steps
  PriorityParams priority;
  std::string output;

  MemoryPolicy policy() const { return {mode, t, n, main_capacity, cache_capacity}; }

  AgentConfig resolved_agent() const {
    AgentConfig a = agent;
    a.epsilon_decay_steps = epsilon_decay_steps.value_or(total_steps / 5);
    return a;
  }

  void validate() const {
    if (env != "gridworld" && env != "cartpole")
      throw std::invalid_argument("unknown environment '" + env + "' (expected gridworld or cartpole)");
    policy().validate();
    resolved_agent().validate();
    priority.validate();
    if (eval_interval == 0) throw std::invalid_argument("eval_interval must be positive");
    if (eval_episodes == 0) throw std::invalid_argument("eval_episodes must be at least 1");
    const std::size_t store = mode == MemoryMode::DualDMS ? cache_capacity : main_capacity;
    if (agent.batch_size > store)
      throw std::invalid_argument("batch_size exceeds the capacity of the memory that is sampled");
  }
};

/// Desk-scale defaults per environment and memory mode. The dual memory
/// splits the budget 80/20 between main and cache; single modes get the
/// whole budget.
inline ExperimentConfig preset(std::string_view env, MemoryMode mode) {
  ExperimentConfig cfg;
  cfg.env = std::string(env);
  cfg.mode = mode;
  if (env == "gridworld") {
    cfg.total_steps = 50'000;
    cfg.agent.hidden = {32, 32};
    cfg.main_capacity = 2000;
    cfg.cache_capacity = 500;
  } else if (env == "cartpole") {
    cfg.total_steps = 150'000;
    cfg.agent.hidden = {64, 64};
    cfg.main_capacity = 8000;
    cfg.cache_capacity = 2000;
  } else {
    throw std::invalid_argument("unknown environment '" + std::string(env) + "' (expected gridworld or cartpole)");
  }
  if (mode != MemoryMode::DualDMS) cfg.main_capacity += cfg.cache_capacity;
  return cfg;
}

using ConfigMap = std::map<std::string, std::string, std::less<>>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw std::invalid_argument("bad value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  return value;
}

// accepts plain integers as well as "1e4"-style values
inline std::size_t parse_count(std::string_view key, std::string_view text) {
  if (text.find_first_of("eE.") == std::string_view::npos) return parse_number<std::size_t>(key, text);
  const double v = parse_number<double>(key, text);
  if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw std::invalid_argument("bad value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  return static_cast<std::size_t>(v);
}

inline std::vector<std::size_t> parse_count_list(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const auto item = trim(text.substr(pos, comma - pos));
    if (!item.empty()) out.push_back(parse_count(key, item));
    pos = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Flat key=value lines; '#' starts a comment.
inline ConfigMap parse_config_text(std::string_view text) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    auto key = detail::trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    out[key] = detail::trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

inline ConfigMap read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

/// Overrides fields of `cfg` from `values`. Unknown keys are rejected.
inline void apply_config(const ConfigMap& values, ExperimentConfig& cfg) {
  using detail::parse_count;
  using detail::parse_number;
  for (const auto& [key, value] : values) {
    if (key == "env") cfg.env = value;
    else if (key == "mode") cfg.mode = parse_memory_mode(value);
    else if (key == "main_capacity") cfg.main_capacity = parse_count(key, value);
    else if (key == "cache_capacity") cfg.cache_capacity = parse_count(key, value);
    else if (key == "t") cfg.t = parse_count(key, value);
    else if (key == "n") cfg.n = parse_count(key, value);
    else if (key == "total_steps") cfg.total_steps = parse_count(key, value);
    else if (key == "eval_interval") cfg.eval_interval = parse_count(key, value);
    else if (key == "eval_episodes") cfg.eval_episodes = parse_count(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "output") cfg.output = value;
    else if (key == "gamma") cfg.agent.gamma = parse_number<double>(key, value);
    else if (key == "learning_rate") cfg.agent.learning_rate = parse_number<double>(key, value);
    else if (key == "batch_size") cfg.agent.batch_size = parse_count(key, value);
    else if (key == "target_sync_interval") cfg.agent.target_sync_interval = parse_count(key, value);
    else if (key == "epsilon_start") cfg.agent.epsilon_start = parse_number<double>(key, value);
    else if (key == "epsilon_end") cfg.agent.epsilon_end = parse_number<double>(key, value);
    else if (key == "epsilon_decay_steps") cfg.epsilon_decay_steps = parse_count(key, value);
    else if (key == "grad_clip_norm") cfg.agent.grad_clip_norm = parse_number<double>(key, value);
    else if (key == "hidden") cfg.agent.hidden = detail::parse_count_list(key, value);
    else if (key == "alpha") cfg.priority.alpha = parse_number<double>(key, value);
    else if (key == "beta") cfg.priority.beta = parse_number<double>(key, value);
    else if (key == "priority_epsilon") cfg.priority.epsilon = parse_number<double>(key, value);
    else if (key == "alpha_remove") cfg.priority.alpha_remove = parse_number<double>(key, value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

/// Preset for the env/mode named in `values` (defaults gridworld/dms), then
/// every value applied on top.
inline ExperimentConfig config_from_map(const ConfigMap& values) {
  const auto env_it = values.find("env");
  const auto mode_it = values.find("mode");
  ExperimentConfig cfg = preset(env_it != values.end() ? env_it->second : "gridworld",
                                mode_it != values.end() ? parse_memory_mode(mode_it->second) : MemoryMode::DualDMS);
  apply_config(values, cfg);
  return cfg;
}

}  // namespace dualmem
