// Matrix <-> vector quadratic-form identities over a topology support, and
// assembly of the coefficient matrices of the collaboration design problem.
#pragma once

#include "cotrack/model.hpp"

#include <vector>

namespace cotrack {

/// Lifts b^T W into w^T B: B is L x N with B(l, n_l) = b(m_l).
MatrixXd lift_linear(const VectorXd& b, const Topology& topo);

/// Lifts tr(C W D W^T) into w^T E w: E(k, l) = C(m_k, m_l) D(n_k, n_l).
/// Bilinear in (C, D); symmetric when C and D are.
MatrixXd lift_quadratic(const MatrixXd& c, const MatrixXd& d,
                        const Topology& topo);

/// Row-selection matrix F with w_offdiag = F w, stacking the weights with
/// m_l != n_l in index order. (L - M) x L, one 1 per row, F F^T = I.
MatrixXd selection_matrix(const Topology& topo);

/// Coefficients of the vectorized ratio problem at parameter variance s:
///   maximize  w' omega_n w / (w' omega_d w + denom_const)
///   s.t.      w' omega_t[i] w + sigma_kappa2 <= mu_i - eta,  i < M
///             w' omega_c[i - M] w <= mu_i - eta,             M <= i < N
struct QuadraticCoefficients {
  MatrixXd omega_n;              ///< rank one: omega_n_vec * omega_n_vec^T
  VectorXd omega_n_vec;          ///< G h where G lifts the mean channel gain
  MatrixXd omega_d;
  std::vector<MatrixXd> omega_t; ///< size M
  std::vector<MatrixXd> omega_c; ///< size N - M
  double denom_const = 0.0;           ///< sigma_kappa2 tr(Lambda_g) + sigma_fc2
  double denom_const_mean_gain = 0.0; ///< sigma_kappa2 g'g + sigma_fc2 variant
  double s = 0.0;                     ///< variance the assembly was taken at
};

/// Precomputes the s-independent parts once; at(s) then only rescales.
/// The per-step statistics-based scheme re-assembles every step, so this
/// cache matters there.
class CoefficientAssembler {
 public:
  CoefficientAssembler(const SystemStatistics& stats, const Topology& topo);

  QuadraticCoefficients at(double s) const;

  const Topology& topology() const { return topo_; }

 private:
  Topology topo_;
  int n_, m_;
  VectorXd numerator_vec_;
  MatrixXd omega_d_eps_, omega_d_lh_;                 // omega_d = lh * s + eps
  std::vector<MatrixXd> omega_t2_eps_, omega_t2_lh_;  // same split per sensor
  std::vector<MatrixXd> relay_support_;               // column-indicator part of omega_c
  VectorXd relay_eps_diag_, relay_lh_diag_;           // Dmat(i,i) = lh_ii * s + eps_ii
  double denom_const_, denom_const_mean_gain_;
};

/// One-shot assembly (equivalent to CoefficientAssembler(stats, topo).at(s)).
QuadraticCoefficients assemble_coefficients(const SystemStatistics& stats,
                                            const Topology& topo, double s);

/// Ratio objective evaluated through the vectorized coefficients.
double vectorized_objective(const QuadraticCoefficients& coef, const VectorXd& w);

/// Per-sensor expected costs evaluated through the vectorized coefficients
/// (the dual route to model::expected_costs).
VectorXd vectorized_costs(const QuadraticCoefficients& coef,
                          const SystemStatistics& stats, const VectorXd& w);

} // namespace cotrack
