// Scalar trackers: the recursive LMMSE with a random measurement coefficient
// and the Kalman variant used when the gain realizations are known.
#pragma once

#include "cotrack/model.hpp"

#include <optional>
#include <vector>

namespace cotrack {

struct FilterState {
  double theta_hat = 0.0;
  double p = 0.0; ///< posterior error variance
  double s = 0.0; ///< prior (unconditional) parameter variance at step k
  int k = 0;

  static FilterState initial(const SystemStatistics& stats) {
    return {0.0, stats.s0, stats.s0, 0};
  }
};

/// Second-order description of the scalar measurement y = u theta + v under
/// a fixed scheme: u has mean coef_mean and variance coef_var, v has
/// variance noise_var, u and v uncorrelated.
struct MeasurementMoments {
  double coef_mean = 0.0;
  double coef_var = 0.0;
  double noise_var = 0.0;
};

/// coef_mean = g'Wh, E[u^2] = tr(W Lambda_h W' Lambda_g),
/// noise_var = tr(W eps_cov W' Lambda_g) + sigma_kappa2 tr(Lambda_g) + fc.
/// coef_var = E[u^2] - coef_mean^2 is snapped to exactly zero when its
/// magnitude is below 1e-10 of scale (cancellation dust); a genuinely
/// negative value beyond that margin throws.
MeasurementMoments measurement_moments(const MatrixXd& w_mat,
                                       const VectorXd& h_mean,
                                       const MatrixXd& h_cov,
                                       const VectorXd& g_mean,
                                       const MatrixXd& g_cov,
                                       const MatrixXd& eps_cov,
                                       double sigma_kappa2, double sigma_fc2);

MeasurementMoments measurement_moments(const CollaborationScheme& scheme,
                                       const SystemStatistics& stats);

/// Moments conditioned on realized gains: means replaced by h_k, g_k with
/// zero covariances. Runs through the identical arithmetic as the
/// statistics-based moments so the two trackers coincide bit for bit when
/// the statistics are degenerate.
MeasurementMoments measurement_moments_csi(const CollaborationScheme& scheme,
                                           const VectorXd& h_k,
                                           const VectorXd& g_k,
                                           const SystemStatistics& stats);

/// One predict+update of the tracker for measurement y under the given
/// measurement moments. Advances s by the prior recursion and uses the
/// advanced value in the gain denominator.
FilterState tracker_step(const FilterState& state, double y,
                         const MeasurementMoments& mom, double alpha,
                         double sigma_tau2);

FilterState rlmmse_step(const FilterState& state, double y,
                        const CollaborationScheme& scheme,
                        const SystemStatistics& stats);

FilterState kalman_csi_step(const FilterState& state, double y,
                            const CollaborationScheme& scheme,
                            const VectorXd& h_k, const VectorXd& g_k,
                            const SystemStatistics& stats);

/// Deterministic error sequences for a fixed scheme, indexed 0..k_max.
///
/// riccati[k] iterates the one-step prediction-error map
///   P <- alpha^2 P d_k / (c^2 P + d_k) + sigma_tau2
/// directly from riccati[0] = p0, with d_k = noise_var + coef_var s_k; its
/// limit is riccati_p_inf(c, d).
///
/// filtered[k] runs the tracker's own error recursion (predict then update)
/// and equals the posterior error E[(theta_k - theta_hat_k)^2]; its limit is
/// the shrunk posterior value d/(c^2 P_pred + d) * P_pred.
struct ErrorTrajectory {
  std::vector<double> riccati;
  std::vector<double> filtered;
};

ErrorTrajectory theoretical_p_trajectory(const CollaborationScheme& scheme,
                                         const SystemStatistics& stats,
                                         int k_max,
                                         std::optional<double> p0 = {});

} // namespace cotrack
