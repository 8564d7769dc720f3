#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dualmem/config.hpp"
#include "dualmem/experiment.hpp"

namespace dualmem {

inline constexpr MemoryMode kAllModes[] = {MemoryMode::SinglePER, MemoryMode::SinglePSMM, MemoryMode::DualDMS};

struct ComparisonRun {
  MemoryMode mode = MemoryMode::DualDMS;
  std::uint64_t seed = 0;
  std::string csv_path;
  RunSummary summary;
};

struct ComparisonResult {
  std::vector<ComparisonRun> runs;  // mode-major, seeds in the given order

  std::vector<const ComparisonRun*> runs_for(MemoryMode mode) const {
    std::vector<const ComparisonRun*> out;
    for (const auto& r : runs)
      if (r.mode == mode) out.push_back(&r);
    return out;
  }
};

inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

inline double final_test_return(const RunSummary& s) { return s.rows.empty() ? 0.0 : s.rows.back().test_return_mean; }

/// Per-run configuration for `mode` derived from a shared dual-memory config:
/// the single modes get one buffer holding the combined main + cache budget.
inline ExperimentConfig config_for_mode(const ExperimentConfig& shared, MemoryMode mode, std::uint64_t seed) {
  ExperimentConfig cfg = shared;
  cfg.mode = mode;
  cfg.seed = seed;
  if (mode != MemoryMode::DualDMS) cfg.main_capacity = shared.main_capacity + shared.cache_capacity;
  return cfg;
}

/// Runs every memory mode for every seed, writing <mode>_seed<s>.csv per run,
/// <mode>.csv with the across-seed mean curve and summary.csv with final
/// values. `jobs` independent runs execute concurrently.
inline ComparisonResult run_comparison(const ExperimentConfig& shared, const std::vector<std::uint64_t>& seeds,
                                       const std::filesystem::path& out_dir, unsigned jobs = 1) {
  if (seeds.empty()) throw std::invalid_argument("compare needs at least one seed");
  for (MemoryMode mode : kAllModes) config_for_mode(shared, mode, seeds.front()).validate();
  std::filesystem::create_directories(out_dir);

  ComparisonResult result;
  for (MemoryMode mode : kAllModes)
    for (std::uint64_t seed : seeds) {
      ComparisonRun run;
      run.mode = mode;
      run.seed = seed;
      run.csv_path = (out_dir / (std::string(to_string(mode)) + "_seed" + std::to_string(seed) + ".csv")).string();
      result.runs.push_back(std::move(run));
    }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < result.runs.size(); i = next++) {
      auto& run = result.runs[i];
      try {
        ExperimentConfig cfg = config_for_mode(shared, run.mode, run.seed);
        cfg.output = run.csv_path;
        run.summary = run_experiment(cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(result.runs.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  for (MemoryMode mode : kAllModes) {
    const auto runs = result.runs_for(mode);
    std::vector<MetricsRow> mean_rows = runs.front()->summary.rows;
    const auto k = static_cast<double>(runs.size());
    for (std::size_t r = 0; r < mean_rows.size(); ++r) {
      MetricsRow m{};
      m.step = mean_rows[r].step;
      double episodes = 0.0;
      double cache = 0.0;
      double main = 0.0;
      for (const auto* run : runs) {
        const auto& row = run->summary.rows[r];
        episodes += static_cast<double>(row.episodes);
        m.train_return_mean100 += row.train_return_mean100 / k;
        m.test_return_mean += row.test_return_mean / k;
        m.wall_clock_s += row.wall_clock_s / k;
        m.refresh_time_mean_us += row.refresh_time_mean_us / k;
        cache += static_cast<double>(row.cache_count);
        main += static_cast<double>(row.main_count);
      }
      m.episodes = static_cast<std::size_t>(episodes / k);
      m.cache_count = static_cast<std::size_t>(cache / k);
      m.main_count = static_cast<std::size_t>(main / k);
      mean_rows[r] = m;
    }
    write_metrics_csv((out_dir / (std::string(to_string(mode)) + ".csv")).string(), mean_rows);
  }

  std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write summary.csv in " + out_dir.string());
  summary << "mode,seed,final_step,final_train_return_mean100,final_test_return,training_steps,wall_clock_s\n";
  char buf[256];
  for (const auto& run : result.runs) {
    const auto& rows = run.summary.rows;
    std::snprintf(buf, sizeof buf, "%s,%llu,%zu,%.6f,%.6f,%zu,%.3f", std::string(to_string(run.mode)).c_str(),
                  static_cast<unsigned long long>(run.seed), rows.empty() ? 0 : rows.back().step,
                  rows.empty() ? 0.0 : rows.back().train_return_mean100, final_test_return(run.summary),
                  run.summary.training_steps, run.summary.wall_clock_s);
    summary << buf << '\n';
  }
  for (MemoryMode mode : kAllModes) {
    std::vector<double> train;
    std::vector<double> test;
    for (const auto* run : result.runs_for(mode)) {
      train.push_back(run->summary.rows.empty() ? 0.0 : run->summary.rows.back().train_return_mean100);
      test.push_back(final_test_return(run->summary));
    }
    std::snprintf(buf, sizeof buf, "%s,median,,%.6f,%.6f,,", std::string(to_string(mode)).c_str(), median(train),
                  median(test));
    summary << buf << '\n';
  }
  return result;
}

}  // namespace dualmem
