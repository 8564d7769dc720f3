#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualmem/dual_memory.hpp"
#include "dualmem/priority.hpp"

namespace dualmem {

struct BenchOptions {
  MemoryMode mode = MemoryMode::DualDMS;
  std::size_t t = 16;
  std::size_t n = 4;
  std::size_t cache_capacity = 2000;  // dual memory only
  std::size_t batch = 32;
  std::size_t trials = 200;
  std::size_t warmup_trials = 10;
  std::size_t obs_dim = 4;
  std::uint64_t seed = 0;
};

struct BenchRow {
  MemoryMode mode = MemoryMode::DualDMS;
  std::size_t main_capacity = 0;
  std::size_t cache_capacity = 0;
  double op_cycle_mean_us = 0.0;
  double op_cycle_p95_us = 0.0;
};

inline constexpr const char* kBenchHeader = "mode,main_capacity,cache_capacity,op_cycle_mean_us,op_cycle_p95_us";

namespace detail {

class SyntheticSource {
 public:
  SyntheticSource(std::size_t obs_dim, std::uint64_t seed) : rng_(seed) {
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    for (auto& tr : pool_) {
      tr.state.resize(obs_dim);
      tr.next_state.resize(obs_dim);
      for (double& v : tr.state) v = value(rng_);
      for (double& v : tr.next_state) v = value(rng_);
      tr.action = rng_() % 2;
      tr.reward = value(rng_);
    }
  }

  Transition next() { return pool_[cursor_++ % pool_.size()]; }
  double td_error() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::vector<Transition> pool_ = std::vector<Transition>(256);
  std::size_t cursor_ = 0;
};

inline void randomize_priorities(ReplayMemory& memory, SyntheticSource& src) {
  std::vector<EntryHandle> handles;
  std::vector<double> deltas;
  for (std::size_t slot : memory.store().occupied_slots()) {
    handles.push_back(memory.store().handle(slot));
    deltas.push_back(src.td_error());
  }
  memory.update_priorities(handles, deltas);
}

}  // namespace detail

/// Times one memory-management cycle with no neural network involved:
/// n ingests (with eviction where the mode evicts on insert), the cache
/// refresh for the dual memory, one minibatch sample and one priority
/// write-back. Memories start full with random priorities.
inline std::vector<BenchRow> bench_memory_ops(const std::vector<std::size_t>& capacities, const BenchOptions& opt) {
  std::vector<BenchRow> rows;
  if (opt.trials == 0) return rows;
  using clock = std::chrono::steady_clock;

  for (std::size_t capacity : capacities) {
    const MemoryPolicy policy{opt.mode, opt.t, opt.n, capacity, opt.cache_capacity};
    ReplayMemory memory(policy, PriorityParams{});
    detail::SyntheticSource src(opt.obs_dim, opt.seed);
    auto& rng = src.rng();

    const bool dual = opt.mode == MemoryMode::DualDMS;
    for (std::size_t i = 0; i < capacity; ++i) {
      memory.ingest(src.next(), rng);
      if (dual && memory.pending_count() == opt.n) memory.discard_pending();
    }
    if (dual) {
      memory.discard_pending();
      while (memory.store().free_space() >= opt.t + opt.n) {
        for (std::size_t i = 0; i < opt.n; ++i) memory.ingest(src.next(), rng);
        memory.refresh_cache(rng);
      }
    }
    detail::randomize_priorities(memory, src);

    std::vector<double> times;
    times.reserve(opt.trials);
    std::vector<double> deltas(opt.batch);
    for (std::size_t trial = 0; trial < opt.warmup_trials + opt.trials; ++trial) {
      std::vector<Transition> incoming(opt.n);
      for (auto& tr : incoming) tr = src.next();
      for (double& d : deltas) d = src.td_error();

      const auto t0 = clock::now();
      for (auto& tr : incoming) memory.ingest(std::move(tr), rng);
      if (dual) memory.refresh_cache(rng);
      const auto batch = memory.sample_minibatch(opt.batch, rng);
      memory.update_priorities(batch.handles, deltas);
      const double us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();
      if (trial >= opt.warmup_trials) times.push_back(us);
    }

    BenchRow row;
    row.mode = opt.mode;
    row.main_capacity = capacity;
    row.cache_capacity = dual ? opt.cache_capacity : 0;
    row.op_cycle_mean_us = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
    std::sort(times.begin(), times.end());
    const auto p95 = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(times.size()))) - 1;
    row.op_cycle_p95_us = times[p95];
    rows.push_back(row);
  }
  return rows;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << kBenchHeader << '\n';
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.3f,%.3f", std::string(to_string(r.mode)).c_str(), r.main_capacity,
                  r.cache_capacity, r.op_cycle_mean_us, r.op_cycle_p95_us);
    os << buf << '\n';
  }
}

inline void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_bench_csv(os, rows);
}

}  // namespace dualmem
