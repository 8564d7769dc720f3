#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dualmem/compare.hpp"
#include "dualmem/experiment.hpp"

using namespace dualmem;

namespace {

ExperimentConfig small_config(MemoryMode mode = MemoryMode::DualDMS) {
  auto cfg = preset("gridworld", mode);
  cfg.total_steps = 1000;
  cfg.eval_interval = 250;
  cfg.eval_episodes = 2;
  cfg.agent.hidden = {8};
  cfg.main_capacity = 400;
  cfg.cache_capacity = 100;
  return cfg;
}

// Drops the wall_clock_s and refresh_time_mean_us columns.
std::string strip_timing(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  for (auto r : rows) {
    r.wall_clock_s = 0.0;
    r.refresh_time_mean_us = 0.0;
    os << format_metrics_row(r) << '\n';
  }
  return os.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

// Expected return of the uniform random policy from (0, 0) under the step
// limit, by backward induction over the remaining steps.
double random_policy_value() {
  std::array<std::array<double, 5>, 5> v{};
  for (std::size_t k = 1; k <= GridWorld::kMaxSteps; ++k) {
    std::array<std::array<double, 5>, 5> next{};
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) {
        if (r == 4 && c == 4) continue;
        const int moves[4][2] = {{std::max(r - 1, 0), c}, {std::min(r + 1, 4), c}, {r, std::max(c - 1, 0)},
                                 {r, std::min(c + 1, 4)}};
        double acc = 0.0;
        for (const auto& m : moves)
          acc += (m[0] == 4 && m[1] == 4) ? 1.0 : -0.01 + v[m[0]][m[1]];
        next[r][c] = acc / 4.0;
      }
    v = next;
  }
  return v[0][0];
}

}  // namespace

TEST(Metrics, HeaderAndRowFormat) {
  EXPECT_STREQ(kMetricsHeader,
               "step,episodes,train_return_mean100,test_return_mean,wall_clock_s,refresh_time_mean_us,cache_count,"
               "main_count");
  MetricsRow r{1000, 12, 0.5, -0.25, 1.23456, 7.5, 500, 2000};
  EXPECT_EQ(format_metrics_row(r), "1000,12,0.500000,-0.250000,1.235,7.500,500,2000");
  std::ostringstream os;
  write_metrics_csv(os, {r});
  EXPECT_EQ(os.str(), std::string(kMetricsHeader) + "\n1000,12,0.500000,-0.250000,1.235,7.500,500,2000\n");
}

TEST(Evaluate, RequiresEpisodes) {
  GridWorld env;
  auto policy = [](const Observation&, std::mt19937_64&) { return std::size_t{3}; };
  EXPECT_THROW(evaluate_policy(policy, env, 0, 1), std::invalid_argument);
}

TEST(Evaluate, DeterministicPolicies) {
  GridWorld env;
  // down four times, then right
  auto optimal = [](const Observation& o, std::mt19937_64&) { return o[0] < 1.0 ? std::size_t{1} : std::size_t{3}; };
  EXPECT_NEAR(evaluate_policy(optimal, env, 3, 0), 0.93, 1e-12);
  auto stuck = [](const Observation&, std::mt19937_64&) { return std::size_t{0}; };
  EXPECT_NEAR(evaluate_policy(stuck, env, 2, 0), -2.0, 1e-12);
}

TEST(Evaluate, RandomPolicyMatchesDynamicProgramming) {
  GridWorld env;
  auto random = [](const Observation&, std::mt19937_64& rng) { return static_cast<std::size_t>(rng() % 4); };
  constexpr std::size_t kEpisodes = 4000;
  // per-episode returns lie in [-2, 1]; the spread bound is generous
  const double mc = evaluate_policy(random, env, kEpisodes, 77);
  const double exact = random_policy_value();
  EXPECT_NEAR(mc, exact, 4.0 * 1.5 / std::sqrt(static_cast<double>(kEpisodes)));
}

TEST(Evaluate, SameSeedSameResult) {
  std::mt19937_64 rng(1);
  AgentConfig cfg;
  cfg.hidden = {8};
  DqnAgent agent(4, 2, cfg, rng);
  CartPole a, b;
  EXPECT_EQ(evaluate(agent, a, 3, 10), evaluate(agent, b, 3, 10));
}

TEST(RunExperiment, ZeroStepsProducesNoRows) {
  auto cfg = small_config();
  cfg.total_steps = 0;
  const auto s = run_experiment(cfg);
  EXPECT_TRUE(s.rows.empty());
  EXPECT_EQ(s.training_steps, 0u);
}

TEST(RunExperiment, CadenceAccounting) {
  for (MemoryMode mode : kAllModes) {
    auto cfg = small_config(mode);
    cfg.n = 4;
    const auto s = run_experiment(cfg);
    EXPECT_EQ(s.cadence_points, 250u);
    EXPECT_EQ(s.training_steps + s.skipped_training, 250u);
    if (mode == MemoryMode::DualDMS) {
      EXPECT_EQ(s.refreshes + s.skipped_refreshes, 250u);
      EXPECT_GT(s.refreshes, 0u);
    } else {
      EXPECT_EQ(s.refreshes, 0u);
    }
    EXPECT_GT(s.training_steps, 200u);
    EXPECT_EQ(s.rows.size(), 4u);
  }
}

TEST(RunExperiment, RowsAtEvalInterval) {
  auto cfg = small_config();
  cfg.total_steps = 1100;
  cfg.eval_interval = 300;
  const auto s = run_experiment(cfg);
  ASSERT_EQ(s.rows.size(), 3u);
  EXPECT_EQ(s.rows[0].step, 300u);
  EXPECT_EQ(s.rows[2].step, 900u);
  for (const auto& r : s.rows) {
    EXPECT_LE(r.cache_count, cfg.cache_capacity);
    EXPECT_LE(r.main_count, cfg.main_capacity);
  }
  EXPECT_EQ(s.rows[2].main_count, 400u);
  EXPECT_EQ(s.rows[2].cache_count, 100u);
}

TEST(RunExperiment, RefreshHookSeesInvariants) {
  auto cfg = small_config();
  std::size_t calls = 0;
  RunHooks hooks;
  hooks.on_refresh = [&](std::size_t step, const RefreshReport& r) {
    ++calls;
    EXPECT_EQ(step % cfg.n, 0u);
    EXPECT_EQ(r.copied, cfg.t + cfg.n);
    EXPECT_EQ(r.evicted, r.free_before >= cfg.t + cfg.n ? 0u : cfg.t + cfg.n - r.free_before);
    EXPECT_LE(r.cache_count, cfg.cache_capacity);
  };
  const auto s = run_experiment(cfg, hooks);
  EXPECT_EQ(calls, s.refreshes);
}

TEST(RunExperiment, DeterministicApartFromTiming) {
  for (MemoryMode mode : kAllModes) {
    const auto cfg = small_config(mode);
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    EXPECT_EQ(strip_timing(a.rows), strip_timing(b.rows));
    EXPECT_TRUE(a.network == b.network);
  }
}

TEST(RunExperiment, DifferentSeedsDiverge) {
  auto cfg = small_config();
  const auto a = run_experiment(cfg);
  cfg.seed = 1;
  const auto b = run_experiment(cfg);
  EXPECT_FALSE(a.network == b.network);
}

TEST(RunExperiment, WritesCsv) {
  auto cfg = small_config();
  cfg.output = ::testing::TempDir() + "/run.csv";
  run_experiment(cfg);
  std::ifstream is(cfg.output);
  std::string line;
  std::size_t lines = 0;
  std::getline(is, line);
  EXPECT_EQ(line, kMetricsHeader);
  while (std::getline(is, line)) ++lines;
  EXPECT_EQ(lines, 4u);
}

TEST(Compare, WritesPerRunMeanAndSummaryFiles) {
  auto cfg = small_config();
  cfg.total_steps = 500;
  const auto dir = std::filesystem::path(::testing::TempDir()) / "cmp";
  std::filesystem::remove_all(dir);
  const auto result = run_comparison(cfg, {0, 1}, dir, 2);
  EXPECT_EQ(result.runs.size(), 6u);
  for (const char* name : {"per", "psmm", "dms"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / (std::string(name) + ".csv")));
    EXPECT_TRUE(std::filesystem::exists(dir / (std::string(name) + "_seed0.csv")));
    EXPECT_TRUE(std::filesystem::exists(dir / (std::string(name) + "_seed1.csv")));
  }
  const auto summary = slurp(dir / "summary.csv");
  EXPECT_EQ(summary.rfind("mode,seed,final_step,", 0), 0u);
  // the per-seed file matches a standalone run of the same configuration
  auto single = config_for_mode(cfg, MemoryMode::SinglePER, 1);
  EXPECT_EQ(single.main_capacity, 500u);
  const auto standalone = run_experiment(single);
  EXPECT_EQ(strip_timing(standalone.rows), strip_timing(result.runs_for(MemoryMode::SinglePER)[1]->summary.rows));
}

TEST(Compare, Median) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(run_comparison(small_config(), {}, ::testing::TempDir()), std::invalid_argument);
}
