#include "cotrack/filter.hpp"

#include <cmath>
#include <stdexcept>

namespace cotrack {

MeasurementMoments measurement_moments(const MatrixXd& w_mat,
                                       const VectorXd& h_mean,
                                       const MatrixXd& h_cov,
                                       const VectorXd& g_mean,
                                       const MatrixXd& g_cov,
                                       const MatrixXd& eps_cov,
                                       double sigma_kappa2, double sigma_fc2) {
  const MatrixXd lg = g_mean * g_mean.transpose() + g_cov;
  const MatrixXd lh = h_mean * h_mean.transpose() + h_cov;
  MeasurementMoments mom;
  mom.coef_mean = g_mean.dot(w_mat * h_mean);
  const double coef_sq = (w_mat * lh * w_mat.transpose() * lg).trace();
  mom.noise_var = (w_mat * eps_cov * w_mat.transpose() * lg).trace() +
                  sigma_kappa2 * lg.trace() + sigma_fc2;
  double var = coef_sq - mom.coef_mean * mom.coef_mean;
  const double scale = std::max(1.0, std::abs(coef_sq));
  if (std::abs(var) < 1e-10 * scale) {
    var = 0.0; // cancellation dust; exact zero keeps the CSI reduction exact
  } else if (var < 0.0) {
    throw std::domain_error("measurement coefficient variance is negative "
                            "beyond cancellation tolerance");
  }
  mom.coef_var = var;
  return mom;
}

MeasurementMoments measurement_moments(const CollaborationScheme& scheme,
                                       const SystemStatistics& stats) {
  return measurement_moments(scheme.to_matrix(), stats.h_mean, stats.h_cov,
                             stats.g_mean, stats.g_cov, stats.eps_cov,
                             stats.sigma_kappa2, stats.sigma_fc2);
}

MeasurementMoments measurement_moments_csi(const CollaborationScheme& scheme,
                                           const VectorXd& h_k,
                                           const VectorXd& g_k,
                                           const SystemStatistics& stats) {
  const int n = stats.n();
  const int m = stats.m();
  return measurement_moments(scheme.to_matrix(), h_k, MatrixXd::Zero(n, n),
                             g_k, MatrixXd::Zero(m, m), stats.eps_cov,
                             stats.sigma_kappa2, stats.sigma_fc2);
}

FilterState tracker_step(const FilterState& state, double y,
                         const MeasurementMoments& mom, double alpha,
                         double sigma_tau2) {
  FilterState next;
  next.k = state.k + 1;
  next.s = prior_variance_step(state.s, alpha, sigma_tau2);

  const double theta_pred = alpha * state.theta_hat;
  const double p_pred = alpha * alpha * state.p + sigma_tau2;

  const double den = mom.coef_mean * mom.coef_mean * p_pred + mom.noise_var +
                     mom.coef_var * next.s;
  double gain = 0.0;
  if (mom.coef_mean != 0.0) {
    if (den <= 0.0) throw std::domain_error("tracker gain denominator is zero");
    gain = p_pred * mom.coef_mean / den;
  }
  next.theta_hat = theta_pred + gain * (y - mom.coef_mean * theta_pred);
  next.p = (1.0 - gain * mom.coef_mean) * p_pred;
  return next;
}

FilterState rlmmse_step(const FilterState& state, double y,
                        const CollaborationScheme& scheme,
                        const SystemStatistics& stats) {
  return tracker_step(state, y, measurement_moments(scheme, stats),
                      stats.alpha, stats.sigma_tau2);
}

FilterState kalman_csi_step(const FilterState& state, double y,
                            const CollaborationScheme& scheme,
                            const VectorXd& h_k, const VectorXd& g_k,
                            const SystemStatistics& stats) {
  return tracker_step(state, y, measurement_moments_csi(scheme, h_k, g_k, stats),
                      stats.alpha, stats.sigma_tau2);
}

ErrorTrajectory theoretical_p_trajectory(const CollaborationScheme& scheme,
                                         const SystemStatistics& stats,
                                         int k_max, std::optional<double> p0) {
  const MeasurementMoments mom = measurement_moments(scheme, stats);
  const double c2 = mom.coef_mean * mom.coef_mean;
  const double a2 = stats.alpha * stats.alpha;
  const double start = p0.value_or(stats.s0);

  ErrorTrajectory traj;
  traj.riccati.reserve(k_max + 1);
  traj.filtered.reserve(k_max + 1);
  traj.riccati.push_back(start);
  traj.filtered.push_back(start);

  double s = stats.s0;
  double pr = start;
  double pf = start;
  for (int k = 1; k <= k_max; ++k) {
    s = prior_variance_step(s, stats.alpha, stats.sigma_tau2);
    const double dk = mom.noise_var + mom.coef_var * s;
    pr = a2 * pr * dk / (c2 * pr + dk) + stats.sigma_tau2;
    const double p_pred = a2 * pf + stats.sigma_tau2;
    pf = p_pred * dk / (c2 * p_pred + dk);
    traj.riccati.push_back(pr);
    traj.filtered.push_back(pf);
  }
  return traj;
}

} // namespace cotrack
