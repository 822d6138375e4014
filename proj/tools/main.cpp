// Command-line front end: offline design, Monte Carlo simulation, parameter
// sweeps, and a max-consensus demo.
#include "cotrack/config.hpp"
#include "cotrack/harness.hpp"
#include "cotrack/policy.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace {

using namespace cotrack;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> schemes;
  std::string out_dir = ".";
  std::optional<int> threads;
};

void add_common(CLI::App* app, CommonArgs& args, bool with_trials = true) {
  app->add_option("--config", args.config_path, "configuration file")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", args.seed, "master seed override");
  if (with_trials) app->add_option("--trials", args.trials, "trial count override");
  app->add_option("--schemes", args.schemes,
                  "comma list: offline,online,greedy-stat,greedy-csi");
  app->add_option("--out", args.out_dir, "output directory");
  app->add_option("--threads", args.threads, "worker threads (0 = hardware)");
}

SimConfig materialize(const CommonArgs& args) {
  SimConfig cfg = args.config_path.empty() ? SimConfig{} : load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.trials) cfg.trials = *args.trials;
  if (args.threads) cfg.threads = *args.threads;
  if (args.schemes) {
    cfg.schemes.clear();
    std::stringstream ss(*args.schemes);
    std::string name;
    while (std::getline(ss, name, ',')) cfg.schemes.push_back(scheme_from_name(name));
  }
  return cfg;
}

int cmd_offline(const CommonArgs& args) {
  const SimConfig cfg = materialize(args);
  auto rng = make_stream(cfg.seed, 0, RandomSource::topology);
  const Topology topo = generate_rgg(cfg.n, cfg.r, cfg.m, rng);
  const OfflineSolution sol = solve_offline(cfg.stats(), topo);

  std::printf("network: N=%d M=%d L=%d r=%.3f\n", topo.n(), topo.m(), topo.l(),
              cfg.r);
  std::printf("f(W*)   = %.10g\n", sol.f_value);
  std::printf("P_inf   = %.10g\n", sol.p_inf);
  if (sol.rank_fallback)
    std::printf("warning: relaxation rank ratio %.3g (recovered anyway)\n",
                sol.rank_ratio);
  std::printf("expected costs (budget mu_i - eta):\n");
  for (int i = 0; i < sol.expected_costs.size(); ++i)
    std::printf("  sensor %2d: %10.6f / %.6f\n", i + 1, sol.expected_costs(i),
                cfg.stats().budget(i));
  std::printf("W* =\n");
  const MatrixXd w = sol.scheme.to_matrix();
  for (int i = 0; i < w.rows(); ++i) {
    for (int j = 0; j < w.cols(); ++j) std::printf(" %9.5f", w(i, j));
    std::printf("\n");
  }
  std::filesystem::create_directories(args.out_dir);
  const std::string path = args.out_dir + "/offline_solution.txt";
  save_offline_solution(sol, path);
  std::printf("solution written to %s\n", path.c_str());
  return 0;
}

int cmd_simulate(const CommonArgs& args) {
  const SimConfig cfg = materialize(args);
  const ExperimentResult result = run_experiment(cfg);
  std::filesystem::create_directories(args.out_dir);
  write_mse_csv(result, args.out_dir + "/mse.csv");
  const Scheme trace_scheme =
      std::find(result.schemes.begin(), result.schemes.end(), Scheme::online) !=
              result.schemes.end()
          ? Scheme::online
          : result.schemes.front();
  write_energy_csv(result, trace_scheme, args.out_dir + "/energy.csv");
  std::printf("trials=%d k_max=%d  f(W*)=%.6g  P_inf=%.6g\n", result.trials,
              result.k_max, result.offline.f_value, result.offline.p_inf);
  for (Scheme s : result.schemes) {
    const auto& st = result.series.at(s);
    std::printf("%-12s mse(k=%d) = %.6g  [%.6g, %.6g]  violations=%ld\n",
                scheme_name(s).c_str(), result.k_max, st.mse.back(),
                st.ci_lo.back(), st.ci_hi.back(), result.violations.at(s));
  }
  std::printf("wrote %s/mse.csv and %s/energy.csv (%s trace)\n",
              args.out_dir.c_str(), args.out_dir.c_str(),
              scheme_name(trace_scheme).c_str());
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& param,
              const std::string& values) {
  SimConfig cfg = materialize(args);
  if (!param.empty()) {
    SweepSpec sw;
    sw.param = param;
    std::stringstream ss(values);
    std::string v;
    while (std::getline(ss, v, ',')) sw.values.push_back(std::stod(v));
    cfg.sweep = std::move(sw);
  }
  const auto rows = run_sweep(cfg);
  std::filesystem::create_directories(args.out_dir);
  write_sweep_csv(rows, args.out_dir + "/sweep.csv");
  std::printf("wrote %s/sweep.csv (%zu rows)\n", args.out_dir.c_str(), rows.size());
  return 0;
}

int cmd_consensus(const CommonArgs& args) {
  const SimConfig cfg = materialize(args);
  auto rng = make_stream(cfg.seed, 0, RandomSource::topology);
  const Topology topo = generate_rgg(cfg.n, cfg.r, cfg.m, rng);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  VectorXd betas(cfg.n);
  for (int i = 0; i < cfg.n; ++i) betas(i) = unif(rng);

  std::printf("local betas:");
  for (int i = 0; i < cfg.n; ++i) std::printf(" %.4f", betas(i));
  std::printf("\ncentralized min: %.4f\n", betas.minCoeff());
  for (int round = 0; round <= cfg.n; ++round) {
    const ConsensusResult res = max_consensus_beta(betas, topo, round);
    std::printf("after %2d rounds:", round);
    for (int i = 0; i < cfg.n; ++i) std::printf(" %.4f", res.per_node(i));
    std::printf("%s\n", res.agreed ? "  (agreed)" : "");
    if (res.agreed) break;
  }
  if (!topo.undirected_connected())
    std::printf("note: topology is disconnected; components disagree\n");
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"collaborative tracking with energy-harvesting sensors"};
  app.require_subcommand(1);

  CommonArgs offline_args, sim_args, sweep_args, cons_args;
  std::string sweep_param, sweep_values;

  auto* offline = app.add_subcommand("offline", "solve the offline design");
  add_common(offline, offline_args, false);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo tracking run");
  add_common(simulate, sim_args);

  auto* sweep = app.add_subcommand("sweep", "grid of experiments");
  add_common(sweep, sweep_args);
  sweep->add_option("--param", sweep_param,
                    "eta|r|alpha|n|m|meas_snr|collab_snr (overrides config)");
  sweep->add_option("--values", sweep_values, "comma-separated grid");

  auto* consensus = app.add_subcommand("consensus-demo", "max-consensus trace");
  add_common(consensus, cons_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*offline) return cmd_offline(offline_args);
    if (*simulate) return cmd_simulate(sim_args);
    if (*sweep) return cmd_sweep(sweep_args, sweep_param, sweep_values);
    if (*consensus) return cmd_consensus(cons_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
