// Experiment engine: topology generation, Monte Carlo runs with common
// random numbers across schemes, parameter sweeps, and CSV emission.
#pragma once

#include "cotrack/config.hpp"
#include "cotrack/model.hpp"
#include "cotrack/offline.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cotrack {

/// Uniform points on the unit square, one row per sensor.
MatrixXd sample_rgg_points(int n, std::mt19937_64& rng);

/// Adjacency from pairwise distances: a_ij = 1 iff dist <= radius or i == j,
/// truncated to the first m rows.
Topology rgg_from_points(const MatrixXd& points, double radius, int m);

Topology generate_rgg(int n, double radius, int m, std::mt19937_64& rng);

/// Per-k aggregated series (index 0 holds k = 1).
struct SeriesStat {
  std::vector<double> mse, ci_lo, ci_hi;
};

/// Single-trajectory energy record for one scheme (k_max rows).
struct EnergyTrace {
  MatrixXd stored;    ///< k_max x N, buffer at decision time
  MatrixXd consumed;  ///< k_max x N
  MatrixXd harvested; ///< k_max x N, arrives at the end of step k
  VectorXd beta;      ///< k_max
};

struct ExperimentResult {
  Topology topo;
  OfflineSolution offline;
  int trials = 0;
  int k_max = 0;
  std::vector<Scheme> schemes;
  std::map<Scheme, SeriesStat> series;
  std::map<Scheme, MatrixXd> sq_err;    ///< trials x k_max
  std::map<Scheme, MatrixXd> estimates; ///< trials x k_max
  std::map<Scheme, MatrixXd> beta;      ///< trials x k_max
  std::map<Scheme, EnergyTrace> trace0; ///< trial-0 energy flow
  std::map<Scheme, long> violations;    ///< realized cost exceeded storage
};

/// Runs cfg.trials independent trajectories. Every scheme sees the same
/// realizations and harvests within a trial; the offline design is solved
/// once. Deterministic for a fixed (config, seed); trials run on
/// cfg.threads workers.
ExperimentResult run_experiment(const SimConfig& cfg);

/// Same, over an externally supplied network (sweeps share sensor positions
/// this way).
ExperimentResult run_experiment(const SimConfig& cfg,
                                const SystemStatistics& stats,
                                const Topology& topo);

struct SweepRow {
  std::string param;
  double value;
  Scheme scheme;
  int k;
  double mse, ci_lo, ci_hi;
};

/// Runs one experiment per grid value at a fixed seed. Sensor positions are
/// drawn once and shared across the grid; radius and truncation sweeps
/// reuse them, size sweeps extend them.
std::vector<SweepRow> run_sweep(const SimConfig& cfg);

/// Student-t two-tailed 95% half width of the mean of `values`.
double ci_half_width(const std::vector<double>& values);

void write_mse_csv(const ExperimentResult& result, std::ostream& out);
void write_mse_csv(const ExperimentResult& result, const std::string& path);

/// Emits the trial-0 trace of the given scheme: k, sensor, stored, consumed,
/// harvested, beta.
void write_energy_csv(const ExperimentResult& result, Scheme scheme,
                      std::ostream& out);
void write_energy_csv(const ExperimentResult& result, Scheme scheme,
                      const std::string& path);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

} // namespace cotrack
