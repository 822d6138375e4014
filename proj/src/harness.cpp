#include "cotrack/harness.hpp"

#include "cotrack/filter.hpp"
#include "cotrack/policy.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <thread>

namespace cotrack {

MatrixXd sample_rgg_points(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MatrixXd pts(n, 2);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = unif(rng);
    pts(i, 1) = unif(rng);
  }
  return pts;
}

Topology rgg_from_points(const MatrixXd& points, double radius, int m) {
  const int n = static_cast<int>(points.rows());
  MatrixXd a = MatrixXd::Zero(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        a(i, j) = 1.0;
        continue;
      }
      const double d = (points.row(i) - points.row(j)).norm();
      if (d <= radius) a(i, j) = 1.0;
    }
  }
  return Topology::from_adjacency(std::move(a));
}

Topology generate_rgg(int n, double radius, int m, std::mt19937_64& rng) {
  return rgg_from_points(sample_rgg_points(n, rng), radius, m);
}

double ci_half_width(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  boost::math::students_t dist(n - 1);
  return boost::math::quantile(dist, 0.975) * sd / std::sqrt(double(n));
}

namespace {

struct TrialDraws {
  std::vector<Realization> reals; ///< k = 1..k_max
  MatrixXd harvests;              ///< (k_max + 1) x N, row k holds H_k
};

TrialDraws draw_trial(const SimConfig& cfg, const SystemStatistics& stats,
                      std::uint64_t trial_id) {
  TrialDraws d;
  RealizationSampler sampler(stats, cfg.spec.gain_model, cfg.spec.xi, cfg.seed,
                             trial_id);
  d.reals.reserve(cfg.k_max);
  for (int k = 1; k <= cfg.k_max; ++k) d.reals.push_back(sampler.next());

  auto rng = make_stream(cfg.seed, trial_id, RandomSource::harvest);
  d.harvests.resize(cfg.k_max + 1, stats.n());
  for (int k = 0; k <= cfg.k_max; ++k) {
    for (int i = 0; i < stats.n(); ++i) {
      if (cfg.harvest == HarvestModel::deterministic) {
        d.harvests(k, i) = stats.mu(i);
      } else {
        std::exponential_distribution<double> expo(1.0 / stats.mu(i));
        d.harvests(k, i) = expo(rng);
      }
    }
  }
  return d;
}

} // namespace

ExperimentResult run_experiment(const SimConfig& cfg,
                                const SystemStatistics& stats,
                                const Topology& topo) {
  stats.validate();
  ExperimentResult result;
  result.topo = topo;
  result.trials = cfg.trials;
  result.k_max = cfg.k_max;
  result.schemes = cfg.schemes;

  result.offline = solve_offline(stats, topo);
  const CollaborationScheme& w_star = result.offline.scheme;

  auto active = [&cfg](Scheme s) {
    return std::find(cfg.schemes.begin(), cfg.schemes.end(), s) !=
           cfg.schemes.end();
  };

  // The statistics-based design depends only on s_k, which is deterministic,
  // so the per-step problems are solved once and shared by every trial.
  std::vector<CollaborationScheme> stat_schemes;
  if (active(Scheme::greedy_stat)) {
    CoefficientAssembler assembler(stats, topo);
    stat_schemes.reserve(cfg.k_max + 1);
    stat_schemes.push_back(CollaborationScheme::zero(topo)); // unused k = 0
    double s = stats.s0;
    for (int k = 1; k <= cfg.k_max; ++k) {
      s = prior_variance_step(s, stats.alpha, stats.sigma_tau2);
      stat_schemes.push_back(greedy_stat_scheme(assembler, stats, s));
    }
  }

  std::unique_ptr<GreedyCsiPlanner> csi_planner;
  if (active(Scheme::greedy_csi))
    csi_planner = std::make_unique<GreedyCsiPlanner>(stats, topo);

  for (Scheme s : cfg.schemes) {
    result.sq_err[s] = MatrixXd::Zero(cfg.trials, cfg.k_max);
    result.estimates[s] = MatrixXd::Zero(cfg.trials, cfg.k_max);
    result.beta[s] = MatrixXd::Ones(cfg.trials, cfg.k_max);
    result.violations[s] = 0;
    auto& tr = result.trace0[s];
    tr.stored = MatrixXd::Zero(cfg.k_max, stats.n());
    tr.consumed = MatrixXd::Zero(cfg.k_max, stats.n());
    tr.harvested = MatrixXd::Zero(cfg.k_max, stats.n());
    tr.beta = VectorXd::Ones(cfg.k_max);
  }
  std::vector<std::atomic<long>> violation_counts(cfg.schemes.size());

  const SdpOptions csi_opts{.tol = 1e-6, .max_iter = 100};

  auto run_trial = [&](int trial) {
    const TrialDraws draws = draw_trial(cfg, stats, trial + 1);
    for (size_t si = 0; si < cfg.schemes.size(); ++si) {
      const Scheme s = cfg.schemes[si];
      MatrixXd& estimates = result.estimates.at(s);
      MatrixXd& sq_err = result.sq_err.at(s);
      MatrixXd& betas = result.beta.at(s);
      FilterState filter = FilterState::initial(stats);
      EnergyState energy{draws.harvests.row(0).transpose()};
      for (int k = 1; k <= cfg.k_max; ++k) {
        const Realization& real = draws.reals[k - 1];
        double beta_k = 1.0;
        bool muted = false;
        CollaborationScheme applied;
        VectorXd costs;
        if (s == Scheme::offline_fixed) {
          applied = w_star;
          const auto [y0, z] = observe(real, applied);
          (void)y0;
          costs = realized_costs(applied, real, z);
          if ((costs.array() > energy.stored.array()).any())
            ++violation_counts[si];
        } else {
          CollaborationScheme candidate;
          if (s == Scheme::online) candidate = w_star;
          else if (s == Scheme::greedy_stat) candidate = stat_schemes[k];
          else candidate = csi_planner->design(real.h, real.g, csi_opts);
          PolicyDecision decision = online_decide(candidate, energy, real);
          beta_k = decision.beta;
          muted = decision.muted;
          if ((decision.costs.array() > energy.stored.array()).any())
            ++violation_counts[si];
          applied = std::move(decision.scheme_k);
          costs = std::move(decision.costs);
        }
        // A muted sensor set transmits nothing, so the FC hears only its
        // own receiver noise. The filter gain is zero either way.
        const double y = muted ? real.fc_noise : observe(real, applied).first;
        filter = s == Scheme::greedy_csi
                     ? kalman_csi_step(filter, y, applied, real.h, real.g, stats)
                     : rlmmse_step(filter, y, applied, stats);
        estimates(trial, k - 1) = filter.theta_hat;
        const double err = filter.theta_hat - real.theta;
        sq_err(trial, k - 1) = err * err;
        betas(trial, k - 1) = beta_k;
        if (trial == 0) {
          auto& tr = result.trace0.at(s);
          tr.stored.row(k - 1) = energy.stored.transpose();
          tr.consumed.row(k - 1) = costs.transpose();
          tr.harvested.row(k - 1) = draws.harvests.row(k);
          tr.beta(k - 1) = beta_k;
        }
        energy = update_energy(energy, costs, draws.harvests.row(k).transpose());
      }
    }
  };

  int threads = cfg.threads > 0
                    ? cfg.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, cfg.trials));
  if (threads == 1) {
    for (int t = 0; t < cfg.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1))
          run_trial(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (size_t si = 0; si < cfg.schemes.size(); ++si) {
    const Scheme s = cfg.schemes[si];
    result.violations[s] = violation_counts[si].load();
    SeriesStat stat;
    stat.mse.resize(cfg.k_max);
    stat.ci_lo.resize(cfg.k_max);
    stat.ci_hi.resize(cfg.k_max);
    for (int k = 0; k < cfg.k_max; ++k) {
      std::vector<double> col(cfg.trials);
      for (int t = 0; t < cfg.trials; ++t) col[t] = result.sq_err[s](t, k);
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= cfg.trials;
      const double hw = ci_half_width(col);
      stat.mse[k] = mean;
      stat.ci_lo[k] = mean - hw;
      stat.ci_hi[k] = mean + hw;
    }
    result.series[s] = std::move(stat);
  }
  return result;
}

ExperimentResult run_experiment(const SimConfig& cfg) {
  const SystemStatistics stats = cfg.stats();
  auto rng = make_stream(cfg.seed, 0, RandomSource::topology);
  const MatrixXd points = sample_rgg_points(cfg.n, rng);
  return run_experiment(cfg, stats, rgg_from_points(points, cfg.r, cfg.m));
}

std::vector<SweepRow> run_sweep(const SimConfig& cfg) {
  if (!cfg.sweep || cfg.sweep->values.empty())
    throw std::invalid_argument("run_sweep: config has no sweep grid");
  const SweepSpec& sw = *cfg.sweep;

  int max_n = cfg.n;
  if (sw.param == "n")
    for (double v : sw.values) max_n = std::max(max_n, static_cast<int>(v));
  auto rng = make_stream(cfg.seed, 0, RandomSource::topology);
  const MatrixXd points = sample_rgg_points(max_n, rng);

  std::vector<SweepRow> rows;
  for (double value : sw.values) {
    SimConfig point_cfg = cfg;
    point_cfg.sweep.reset();
    if (sw.param == "eta") point_cfg.spec.eta = value;
    else if (sw.param == "alpha") point_cfg.spec.alpha = value;
    else if (sw.param == "r") point_cfg.r = value;
    else if (sw.param == "n") point_cfg.n = static_cast<int>(value);
    else if (sw.param == "m") point_cfg.m = static_cast<int>(value);
    else if (sw.param == "meas_snr") point_cfg.spec.meas_snr_scale = value;
    else if (sw.param == "collab_snr") point_cfg.spec.collab_snr_scale = value;
    else throw std::invalid_argument("unknown sweep parameter: " + sw.param);

    const SystemStatistics stats = point_cfg.stats();
    const Topology topo = rgg_from_points(points.topRows(point_cfg.n),
                                          point_cfg.r, point_cfg.m);
    const ExperimentResult res = run_experiment(point_cfg, stats, topo);
    for (Scheme s : res.schemes) {
      const SeriesStat& st = res.series.at(s);
      for (int k = 1; k <= res.k_max; ++k) {
        rows.push_back({sw.param, value, s, k, st.mse[k - 1], st.ci_lo[k - 1],
                        st.ci_hi[k - 1]});
      }
    }
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

void write_mse_csv(const ExperimentResult& result, std::ostream& out) {
  out << "k,scheme,mse,ci_lo,ci_hi\n";
  for (Scheme s : result.schemes) {
    const SeriesStat& st = result.series.at(s);
    for (int k = 1; k <= result.k_max; ++k) {
      out << k << "," << scheme_name(s) << "," << fmt(st.mse[k - 1]) << ","
          << fmt(st.ci_lo[k - 1]) << "," << fmt(st.ci_hi[k - 1]) << "\n";
    }
  }
}

void write_energy_csv(const ExperimentResult& result, Scheme scheme,
                      std::ostream& out) {
  const EnergyTrace& tr = result.trace0.at(scheme);
  const int n = static_cast<int>(tr.stored.cols());
  out << "k,sensor,stored,consumed,harvested,beta\n";
  for (int k = 1; k <= result.k_max; ++k) {
    for (int i = 0; i < n; ++i) {
      out << k << "," << (i + 1) << "," << fmt(tr.stored(k - 1, i)) << ","
          << fmt(tr.consumed(k - 1, i)) << "," << fmt(tr.harvested(k - 1, i))
          << "," << fmt(tr.beta(k - 1)) << "\n";
    }
  }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "param,value,scheme,k,mse,ci_lo,ci_hi\n";
  for (const auto& r : rows) {
    out << r.param << "," << fmt(r.value) << "," << scheme_name(r.scheme) << ","
        << r.k << "," << fmt(r.mse) << "," << fmt(r.ci_lo) << ","
        << fmt(r.ci_hi) << "\n";
  }
}

namespace {

template <typename Fn>
void to_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  fn(out);
}

} // namespace

void write_mse_csv(const ExperimentResult& result, const std::string& path) {
  to_file(path, [&](std::ostream& o) { write_mse_csv(result, o); });
}

void write_energy_csv(const ExperimentResult& result, Scheme scheme,
                      const std::string& path) {
  to_file(path, [&](std::ostream& o) { write_energy_csv(result, scheme, o); });
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  to_file(path, [&](std::ostream& o) { write_sweep_csv(rows, o); });
}

} // namespace cotrack
