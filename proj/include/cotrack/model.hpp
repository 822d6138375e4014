// Core domain types of the collaborative tracking system: second-order
// statistics, network topology, collaboration weights, and per-step
// realizations of the physical channel.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cotrack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// All second-order statistics the fusion center is assumed to know.
/// Immutable after construction; shareable across threads.
struct SystemStatistics {
  double alpha = 0.8;        ///< state transition coefficient, |alpha| < 1
  double sigma_tau2 = 0.5;   ///< process noise variance
  VectorXd h_mean;           ///< observation gain mean (length N)
  MatrixXd h_cov;            ///< observation gain covariance (N x N)
  VectorXd g_mean;           ///< channel gain mean (length M)
  MatrixXd g_cov;            ///< channel gain covariance (M x M)
  MatrixXd eps_cov;          ///< measurement noise covariance (N x N)
  double sigma_kappa2 = 0.5; ///< collaboration (inter-sensor MAC) noise variance
  double sigma_fc2 = 1.0;    ///< sensor-to-FC channel noise variance
  VectorXd mu;               ///< mean harvested energy per step (length N)
  double eta = 0.01;         ///< reserve energy margin kept in the buffer
  double s0 = 100.0;         ///< initial parameter variance

  int n() const { return static_cast<int>(h_mean.size()); }
  int m() const { return static_cast<int>(g_mean.size()); }

  /// Stationary parameter variance sigma_tau^2 / (1 - alpha^2).
  double s_inf() const { return sigma_tau2 / (1.0 - alpha * alpha); }

  /// Energy budget available to sensor i (0-based): mu_i - eta.
  double budget(int i) const { return mu(i) - eta; }

  /// Throws std::invalid_argument if any structural invariant is violated:
  /// |alpha| >= 1, negative variances, non-PSD covariances, eta <= 0, or an
  /// FC-communicating sensor with mu_i - eta - sigma_kappa2 <= 0 (the strict
  /// feasibility margin of the collaboration design problem).
  void validate() const;
};

/// Moments of the Rayleigh(xi) distribution.
double rayleigh_mean(double xi);
double rayleigh_var(double xi);

/// Statistics preset used throughout the experiments: Rayleigh(xi) gains,
/// eps_cov = 0.5 (I + 11^T), sigma_fc2 = 1, sigma_kappa2 = 0.5, Gauss-Markov
/// parameter with alpha = 0.8, sigma_tau2 = 0.5, s0 = 100, mu_i = 10,
/// eta = 0.01.
SystemStatistics default_statistics(int n, int m, double xi = 1.0);

/// Binary M x N adjacency-with-self-loops matrix plus the column-major
/// index map linking nonzero entries of W to the weight vector w.
struct Topology {
  MatrixXd a;                                 ///< M x N, entries in {0,1}
  std::vector<std::pair<int, int>> index_map; ///< (row, col) per weight, column-major

  int m() const { return static_cast<int>(a.rows()); }
  int n() const { return static_cast<int>(a.cols()); }
  int l() const { return static_cast<int>(index_map.size()); }

  /// Validates entries, self loops on the first M sensors, M <= N, and
  /// builds the index map. Throws std::invalid_argument on violation.
  static Topology from_adjacency(MatrixXd adjacency);

  /// Fully connected M x N topology (every entry 1).
  static Topology complete(int n, int m);

  /// True if the undirected support (i ~ j when either directed link exists)
  /// is connected over all N sensors.
  bool undirected_connected() const;
};

/// A weight matrix W respecting the topology sparsity pattern, stored as the
/// vector of its supported entries.
struct CollaborationScheme {
  Topology topo;
  VectorXd w; ///< length topo.l()

  CollaborationScheme() = default;
  CollaborationScheme(Topology t, VectorXd weights);

  /// Zero weights on the given topology.
  static CollaborationScheme zero(const Topology& t);

  /// Densifies to the M x N matrix form.
  MatrixXd to_matrix() const;

  /// Entry-wise scaling (the beta-policy uses this).
  CollaborationScheme scaled(double factor) const;
};

/// One time step worth of random draws.
struct Realization {
  double theta = 0.0;
  VectorXd h;      ///< observation gains (length N)
  VectorXd g;      ///< channel gains (length M)
  VectorXd eps;    ///< measurement noise (length N)
  VectorXd kappa;  ///< collaboration noise (length M)
  double fc_noise = 0.0;
};

// ---------------------------------------------------------------------------
// Moment computations
// ---------------------------------------------------------------------------

/// theta_k = alpha * theta_{k-1} + tau_k.
double step_theta(double theta_prev, double alpha, double tau);

/// s_k = alpha^2 s_{k-1} + sigma_tau^2.
double prior_variance_step(double s_prev, double alpha, double sigma_tau2);

/// E[x x^T] = eps_cov + s (h h^T + h_cov), symmetrized.
MatrixXd second_moment_x(const SystemStatistics& stats, double s);

/// Lambda_g = g g^T + g_cov, symmetrized.
MatrixXd lambda_g(const SystemStatistics& stats);

/// Lambda_h = h h^T + h_cov, symmetrized.
MatrixXd lambda_h(const SystemStatistics& stats);

/// Expected per-sensor transmission cost E[T_i(W)] when var(theta) = s:
/// relay cost [E[xx^T]]_ii * sum of squared off-diagonal column-i weights for
/// every sensor, plus [W E[xx^T] W^T]_ii + sigma_kappa2 for sensors i < M.
/// Computed directly in matrix form (independent of the vectorized route).
VectorXd expected_costs(const CollaborationScheme& scheme,
                        const SystemStatistics& stats, double s);

/// Physical channel: x = h theta + eps, z = W x + kappa, y = g^T z + fc_noise.
/// Returns (y, z).
std::pair<double, VectorXd> observe(const Realization& real,
                                    const CollaborationScheme& scheme);

// ---------------------------------------------------------------------------
// Random streams and sampling
// ---------------------------------------------------------------------------

/// Named random sources. Every (trial, source) pair gets an independently
/// seeded stream so trials parallelize and schemes share realizations.
enum class RandomSource : std::uint64_t {
  theta = 1,
  gain_h = 2,
  gain_g = 3,
  meas_noise = 4,
  collab_noise = 5,
  fc_noise = 6,
  harvest = 7,
  topology = 8,
};

/// splitmix64-based seed derivation; avalanches master/trial/source.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial,
                          std::uint64_t source);

std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t trial,
                            RandomSource source);

/// Draws from N(0, cov) via a spectral factor; tolerates PSD-singular inputs.
class MvnSampler {
 public:
  explicit MvnSampler(const MatrixXd& cov);
  VectorXd draw(std::mt19937_64& rng) const;

 private:
  MatrixXd transform_;
};

/// Gain distribution behind the sampler. The optimizer only consumes second
/// moments, so the distribution is pluggable.
enum class GainModel {
  rayleigh,      ///< i.i.d. Rayleigh(xi) entries
  gaussian,      ///< N(mean, cov) with the statistics' moments
  deterministic, ///< gains equal to their means every step
};

/// Per-trial sampler owning the running Gauss-Markov chain and one stream per
/// noise source. Not shared between concurrent trials.
class RealizationSampler {
 public:
  RealizationSampler(const SystemStatistics& stats, GainModel model, double xi,
                     std::uint64_t master_seed, std::uint64_t trial);

  /// Advances the parameter chain one step and draws fresh gains and noises.
  Realization next();

  double current_theta() const { return theta_; }

 private:
  const SystemStatistics& stats_;
  GainModel model_;
  double xi_;
  double theta_;
  MvnSampler eps_sampler_;
  std::mt19937_64 theta_rng_, h_rng_, g_rng_, eps_rng_, kappa_rng_, fc_rng_;
};

} // namespace cotrack
