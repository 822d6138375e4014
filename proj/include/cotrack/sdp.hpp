// Homogenized SDP relaxation of the collaboration ratio problem and a
// self-contained dense primal-dual interior-point solver for it.
#pragma once

#include "cotrack/model.hpp"
#include "cotrack/vectorize.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cotrack {

/// maximize tr(q0 X) s.t. tr(q_constraints[j] X) <= rhs[j], X PSD.
struct HomogeneousSdp {
  MatrixXd q0;
  std::vector<MatrixXd> q_constraints;
  VectorXd rhs;
  VectorXd numerator_vec; ///< carried along for sign normalization of w

  int dim() const { return static_cast<int>(q0.rows()); }
};

/// Which constant closes the homogenization: sigma_kappa2 tr(Lambda_g)
/// (consistent with the ratio objective) or sigma_kappa2 g'g. The two agree
/// when the channel gain covariance is zero.
enum class DenomConstant { trace_lambda_g, mean_gain_square };

/// Builds the (L+1)-dimensional homogeneous problem: the numerator block in
/// the objective, one energy constraint per sensor, and the normalization
/// constraint from the denominator.
HomogeneousSdp homogenize(const QuadraticCoefficients& coef,
                          const SystemStatistics& stats,
                          DenomConstant variant = DenomConstant::trace_lambda_g);

enum class SdpStatus { optimal, infeasible, max_iterations, numerical_failure };

const char* to_string(SdpStatus status);

struct SdpIterate {
  double primal_obj;
  double dual_obj;
  double gap;
  double primal_res;
  double dual_res;
  double step_primal;
  double step_dual;
};

struct SdpSolution {
  MatrixXd x;              ///< primal matrix (problem dimension)
  double objective = 0.0;  ///< tr(q0 x)
  SdpStatus status = SdpStatus::numerical_failure;
  int iterations = 0;
  double duality_gap = 0.0; ///< relative complementarity gap at exit
  std::vector<SdpIterate> trace;
};

struct SdpOptions {
  double tol = 1e-8;
  int max_iter = 200;
  bool keep_trace = false;
};

/// Infeasible-start Mehrotra predictor-corrector with Nesterov-Todd scaling.
/// Dense; deterministic for fixed inputs. Inequalities carry an internal
/// nonnegative slack block.
SdpSolution solve_sdp(const HomogeneousSdp& prob, const SdpOptions& opts = {});

struct RankOneRecovery {
  VectorXd w;
  double rank_ratio = 0.0; ///< lambda_2 / lambda_1 of the leading block
  bool rank_ok = true;     ///< rank_ratio < rank_tol
};

/// Extracts w from the solution matrix: top eigenvector of the leading L x L
/// block scaled by the corner element, sign-normalized so the numerator form
/// is nonnegative. On a rank violation the top eigenvector is still returned
/// with rank_ok = false; callers re-verify feasibility and rescale.
/// Throws std::runtime_error when the corner element is degenerate
/// (below 1e-12) or the solution is not optimal.
RankOneRecovery recover_rank_one(const SdpSolution& sol,
                                 const HomogeneousSdp& prob,
                                 double rank_tol = 1e-6);

/// Writes the problem blocks and the iterate trace as plain text, one matrix
/// per block, rows per line, space-separated.
void dump_sdp_debug(const HomogeneousSdp& prob, const SdpSolution& sol,
                    std::ostream& out);
void dump_sdp_debug(const HomogeneousSdp& prob, const SdpSolution& sol,
                    const std::string& path);

} // namespace cotrack
