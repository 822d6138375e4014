// Offline collaboration design: assemble at the stationary variance, solve
// the relaxation, recover weights, and evaluate the steady-state error.
#pragma once

#include "cotrack/model.hpp"
#include "cotrack/sdp.hpp"
#include "cotrack/vectorize.hpp"

#include <iosfwd>
#include <string>

namespace cotrack {

struct OfflineSolution {
  CollaborationScheme scheme;
  double f_value = 0.0;            ///< optimal ratio at the recovered weights
  double p_inf = 0.0;              ///< steady-state tracking error
  VectorXd expected_costs;         ///< E[T_i] at the stationary variance
  bool rank_fallback = false;      ///< relaxation came back with rank > 1
  double rank_ratio = 0.0;
  double relaxation_bound = 0.0;   ///< SDP objective (upper bound on f)
  bool rescaled = false;           ///< weights shrunk to restore feasibility
};

/// Full pipeline at s = s_inf. Throws on invalid statistics or solver
/// failure; constraint violations after recovery are repaired by scaling the
/// weights down to the boundary (flagged in the result).
OfflineSolution solve_offline(const SystemStatistics& stats,
                              const Topology& topo,
                              const SdpOptions& opts = {.tol = 1e-9});

/// Ratio objective in matrix form:
/// (g'Wh)^2 / (tr(W [Lambda_h s_inf + eps_cov] W' Lambda_g) + const).
double f_of_w(const CollaborationScheme& scheme, const SystemStatistics& stats);

/// Same ratio at an arbitrary variance s (the per-step greedy objective).
double f_of_w_at(const CollaborationScheme& scheme,
                 const SystemStatistics& stats, double s);

/// Mean measurement coefficient g' W h.
double c_bar(const CollaborationScheme& scheme, const SystemStatistics& stats);

/// Effective noise power at stationarity:
/// tr(W eps_cov W' Lambda_g) + sigma_kappa2 tr(Lambda_g) + sigma_fc2
///   + tr(W Lambda_h W' Lambda_g) s_inf - (g'Wh)^2 s_inf.
double d_bar(const CollaborationScheme& scheme, const SystemStatistics& stats);

/// Positive root of c^2 P^2 + (d (1 - alpha^2) - c^2 sigma_tau2) P
/// - d sigma_tau2 = 0; the fixed point of the prediction-error map.
/// c = 0 returns sigma_tau2 / (1 - alpha^2).
double riccati_p_inf(double c_bar, double d_bar, double alpha, double sigma_tau2);

/// Iterates P <- alpha^2 P d / (c^2 P + d) + sigma_tau2 from s_inf.
/// Retained as an in-library cross-check of the closed form.
double riccati_fixed_point(double c_bar, double d_bar, double alpha,
                           double sigma_tau2, int iterations);

/// Largest factor gamma <= 1 with gamma * w meeting every energy constraint;
/// 1 when already feasible.
double feasibility_scale(const QuadraticCoefficients& coef,
                         const SystemStatistics& stats, const VectorXd& w);

/// Text artifact: dimensions, index map, weights, f, p_inf. Round-trips.
void save_offline_solution(const OfflineSolution& sol, std::ostream& out);
void save_offline_solution(const OfflineSolution& sol, const std::string& path);
OfflineSolution load_offline_solution(std::istream& in);
OfflineSolution load_offline_solution(const std::string& path);

} // namespace cotrack
