// Flat key-value configuration: one `key = value` per line, `#` comments,
// vectors as comma-separated decimals, matrices through named generators.
#pragma once

#include "cotrack/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cotrack {

enum class Scheme { offline_fixed, online, greedy_stat, greedy_csi };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

enum class HarvestModel { exponential, deterministic };

/// Generator-level description of the statistics, so sweeps can rebuild them
/// at different network sizes or noise scalings.
struct StatSpec {
  double alpha = 0.8;
  double sigma_tau2 = 0.5;
  double sigma_kappa2 = 0.5;
  double sigma_fc2 = 1.0;
  double eta = 0.01;
  double s0 = 100.0;
  std::string eps_cov = "scaled_i_plus_ones:0.5";
  std::string mu = "10";
  GainModel gain_model = GainModel::rayleigh;
  double xi = 1.0;
  std::string h_mean, g_mean; ///< required for gaussian/deterministic gains
  std::string h_cov, g_cov;   ///< required for gaussian gains
  double meas_snr_scale = 1.0;   ///< divides eps_cov
  double collab_snr_scale = 1.0; ///< divides sigma_kappa2

  SystemStatistics build(int n, int m) const;
};

struct SweepSpec {
  std::string param; ///< eta | r | alpha | n | m | meas_snr | collab_snr
  std::vector<double> values;
};

struct SimConfig {
  StatSpec spec;
  int n = 10;
  int m = 10;
  double r = 0.6;
  int k_max = 20;
  int trials = 500;
  std::vector<Scheme> schemes = {Scheme::offline_fixed, Scheme::online,
                                 Scheme::greedy_stat, Scheme::greedy_csi};
  std::uint64_t seed = 7;
  HarvestModel harvest = HarvestModel::exponential;
  std::optional<SweepSpec> sweep;
  int threads = 0; ///< 0 = hardware concurrency

  SystemStatistics stats() const { return spec.build(n, m); }
};

/// Parses generator strings: "identity:c", "scaled_i_plus_ones:c", "zero",
/// "diag:v1,v2,...". Throws std::invalid_argument on unknown generators.
MatrixXd parse_matrix(const std::string& text, int n);

/// Scalar broadcast or comma-separated list of length n.
VectorXd parse_vector(const std::string& text, int n);

SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);

} // namespace cotrack
