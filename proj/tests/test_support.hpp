// Shared random-instance generators for the test suites.
#pragma once

#include "cotrack/model.hpp"

#include <random>

namespace testutil {

using cotrack::MatrixXd;
using cotrack::VectorXd;

inline MatrixXd random_psd(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
  return scale / n * (a * a.transpose());
}

inline VectorXd random_vector(int n, std::mt19937_64& rng, double lo = -1.0,
                              double hi = 1.0) {
  std::uniform_real_distribution<double> unif(lo, hi);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = unif(rng);
  return v;
}

inline cotrack::Topology random_topology(int n, int m, double density,
                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MatrixXd a = MatrixXd::Zero(m, n);
  for (int i = 0; i < m; ++i) {
    a(i, i) = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i && unif(rng) < density) a(i, j) = 1.0;
  }
  return cotrack::Topology::from_adjacency(std::move(a));
}

inline cotrack::CollaborationScheme random_scheme(const cotrack::Topology& topo,
                                                  std::mt19937_64& rng,
                                                  double scale = 1.0) {
  return {topo, scale * random_vector(topo.l(), rng)};
}

/// Feasible statistics with strictly positive budget margins.
inline cotrack::SystemStatistics random_statistics(int n, int m,
                                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  cotrack::SystemStatistics s;
  s.alpha = 0.5 + 0.4 * unif(rng);
  s.sigma_tau2 = 0.2 + 0.8 * unif(rng);
  s.h_mean = random_vector(n, rng, 0.5, 1.5);
  s.g_mean = random_vector(m, rng, 0.5, 1.5);
  s.h_cov = random_psd(n, rng, 0.4);
  s.g_cov = random_psd(m, rng, 0.4);
  s.eps_cov = random_psd(n, rng, 0.5) + 0.2 * MatrixXd::Identity(n, n);
  s.sigma_kappa2 = 0.1 + 0.9 * unif(rng);
  s.sigma_fc2 = 0.5 + unif(rng);
  s.mu = random_vector(n, rng, 5.0, 15.0);
  s.eta = 0.01 + 0.09 * unif(rng);
  s.s0 = 10.0 + 90.0 * unif(rng);
  return s;
}

} // namespace testutil
