#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "dualmem/dualmem.hpp"

namespace {

using dualmem::ConfigMap;

// Registers a string-valued flag that, when given, overrides `key`.
void override_flag(CLI::App& app, ConfigMap& overrides, std::vector<std::pair<CLI::Option*, std::string>>& flags,
                   const std::string& flag, const std::string& key, const std::string& help) {
  auto* opt = app.add_option(flag, overrides[key], help);
  flags.emplace_back(opt, key);
}

ConfigMap given(const ConfigMap& all, const std::vector<std::pair<CLI::Option*, std::string>>& flags) {
  ConfigMap out;
  for (const auto& [opt, key] : flags)
    if (opt->count() > 0) out[key] = all.at(key);
  return out;
}

dualmem::ExperimentConfig resolve(const std::string& config_path, const ConfigMap& cli) {
  ConfigMap merged = config_path.empty() ? ConfigMap{} : dualmem::read_config_file(config_path);
  for (const auto& [k, v] : cli) merged[k] = v;
  return dualmem::config_from_map(merged);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t s : dualmem::detail::parse_count_list("seeds", text)) seeds.push_back(s);
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual replay memory experiments: training runs, three-way comparisons and memory benchmarks"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train one agent and write its metrics CSV");
  std::string train_config;
  std::string save_weights;
  ConfigMap train_values;
  std::vector<std::pair<CLI::Option*, std::string>> train_flags;
  train->add_option("--config", train_config, "key=value config file; flags override it");
  override_flag(*train, train_values, train_flags, "--env", "env", "gridworld or cartpole");
  override_flag(*train, train_values, train_flags, "--mode", "mode", "per, psmm or dms");
  override_flag(*train, train_values, train_flags, "--main-capacity", "main_capacity", "main (or single) memory size");
  override_flag(*train, train_values, train_flags, "--cache-capacity", "cache_capacity", "cache size (dms)");
  override_flag(*train, train_values, train_flags, "--t", "t", "time-ordered subsets per refresh");
  override_flag(*train, train_values, train_flags, "--n", "n", "environment steps per training step");
  override_flag(*train, train_values, train_flags, "--steps", "total_steps", "environment steps");
  override_flag(*train, train_values, train_flags, "--eval-interval", "eval_interval", "steps between evaluations");
  override_flag(*train, train_values, train_flags, "--eval-episodes", "eval_episodes", "episodes per evaluation");
  override_flag(*train, train_values, train_flags, "--seed", "seed", "run seed");
  override_flag(*train, train_values, train_flags, "--out", "output", "metrics CSV path");
  train->add_option("--save-weights", save_weights, "write the final online network snapshot here");

  // compare
  auto* compare = app.add_subcommand("compare", "Run per, psmm and dms over several seeds");
  std::string compare_config;
  std::string seeds_text = "0,1,2,3,4";
  std::string out_dir = "compare_out";
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  compare->add_option("--config", compare_config, "shared key=value config (dual-memory split)")->required();
  compare->add_option("--seeds", seeds_text, "comma-separated seeds");
  compare->add_option("--out", out_dir, "output directory");
  compare->add_option("--jobs", jobs, "concurrent runs");

  // bench
  auto* bench = app.add_subcommand("bench", "Time memory-management cycles at several capacities");
  std::string capacities_text = "1e4,1e5";
  std::string bench_mode = "dms";
  std::string bench_out;
  dualmem::BenchOptions bench_opt;
  bench->add_option("--capacities", capacities_text, "comma-separated main capacities");
  bench->add_option("--mode", bench_mode, "per, psmm or dms");
  bench->add_option("--cache-capacity", bench_opt.cache_capacity, "cache size (dms)");
  bench->add_option("--t", bench_opt.t, "time-ordered subsets per refresh");
  bench->add_option("--n", bench_opt.n, "ingests per cycle");
  bench->add_option("--trials", bench_opt.trials, "timed cycles per capacity");
  bench->add_option("--out", bench_out, "CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = resolve(train_config, given(train_values, train_flags));
      const auto summary = dualmem::run_experiment(cfg);
      if (cfg.output.empty()) dualmem::write_metrics_csv(std::cout, summary.rows);
      if (!save_weights.empty()) dualmem::save_network(summary.network, save_weights);
      std::cerr << "mode=" << dualmem::to_string(cfg.mode) << " steps=" << cfg.total_steps
                << " cadence_points=" << summary.cadence_points << " refreshes=" << summary.refreshes
                << " skipped_refreshes=" << summary.skipped_refreshes << " training_steps=" << summary.training_steps
                << " skipped_training=" << summary.skipped_training << " episodes=" << summary.episodes
                << " final_test_return=" << dualmem::final_test_return(summary) << '\n';
    } else if (*compare) {
      const auto shared = resolve(compare_config, {});
      const auto result = dualmem::run_comparison(shared, parse_seeds(seeds_text), out_dir, jobs);
      for (auto mode : dualmem::kAllModes) {
        std::vector<double> finals;
        for (const auto* run : result.runs_for(mode)) finals.push_back(dualmem::final_test_return(run->summary));
        std::cerr << dualmem::to_string(mode) << " median final test return " << dualmem::median(finals) << '\n';
      }
    } else if (*bench) {
      bench_opt.mode = dualmem::parse_memory_mode(bench_mode);
      const auto rows =
          dualmem::bench_memory_ops(dualmem::detail::parse_count_list("capacities", capacities_text), bench_opt);
      if (bench_out.empty()) dualmem::write_bench_csv(std::cout, rows);
      else dualmem::write_bench_csv(bench_out, rows);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
