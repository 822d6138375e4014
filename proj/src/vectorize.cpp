#include "cotrack/vectorize.hpp"

#include <stdexcept>

namespace cotrack {

MatrixXd lift_linear(const VectorXd& b, const Topology& topo) {
  if (b.size() != topo.m())
    throw std::invalid_argument("lift_linear: b must have length M");
  MatrixXd lifted = MatrixXd::Zero(topo.l(), topo.n());
  for (int l = 0; l < topo.l(); ++l) {
    const auto [ml, nl] = topo.index_map[l];
    lifted(l, nl) = b(ml);
  }
  return lifted;
}

MatrixXd lift_quadratic(const MatrixXd& c, const MatrixXd& d,
                        const Topology& topo) {
  if (c.rows() != topo.m() || c.cols() != topo.m())
    throw std::invalid_argument("lift_quadratic: C must be M x M");
  if (d.rows() != topo.n() || d.cols() != topo.n())
    throw std::invalid_argument("lift_quadratic: D must be N x N");
  const int l = topo.l();
  MatrixXd e(l, l);
  for (int k = 0; k < l; ++k) {
    const auto [mk, nk] = topo.index_map[k];
    for (int j = 0; j < l; ++j) {
      const auto [mj, nj] = topo.index_map[j];
      e(k, j) = c(mk, mj) * d(nk, nj);
    }
  }
  return e;
}

MatrixXd selection_matrix(const Topology& topo) {
  int diag = 0;
  for (const auto& [i, j] : topo.index_map)
    if (i == j) ++diag;
  if (diag != topo.m())
    throw std::invalid_argument("selection_matrix: topology is missing a self loop");
  MatrixXd f = MatrixXd::Zero(topo.l() - topo.m(), topo.l());
  int row = 0;
  for (int l = 0; l < topo.l(); ++l) {
    const auto& [i, j] = topo.index_map[l];
    if (i != j) f(row++, l) = 1.0;
  }
  return f;
}

CoefficientAssembler::CoefficientAssembler(const SystemStatistics& stats,
                                           const Topology& topo)
    : topo_(topo), n_(topo.n()), m_(topo.m()) {
  if (stats.n() != n_ || stats.m() != m_)
    throw std::invalid_argument("statistics and topology dimensions disagree");

  const MatrixXd lg = lambda_g(stats);
  const MatrixXd lh = lambda_h(stats);
  const MatrixXd g_lift = lift_linear(stats.g_mean, topo_);
  numerator_vec_ = g_lift * stats.h_mean;

  // omega_d and the FC transmission costs are linear in D = lh*s + eps_cov,
  // so keep the two halves separate and combine at a given s.
  omega_d_eps_ = lift_quadratic(lg, stats.eps_cov, topo_);
  omega_d_lh_ = lift_quadratic(lg, lh, topo_);

  omega_t2_eps_.reserve(m_);
  omega_t2_lh_.reserve(m_);
  for (int i = 0; i < m_; ++i) {
    MatrixXd ei = MatrixXd::Zero(m_, m_);
    ei(i, i) = 1.0;
    omega_t2_eps_.push_back(lift_quadratic(ei, stats.eps_cov, topo_));
    omega_t2_lh_.push_back(lift_quadratic(ei, lh, topo_));
  }

  // Relay cost of sensor i: Dmat(i,i) * sum of squared off-diagonal weights
  // in column i, i.e. tr(I W~ e_i e_i' W~'). The identity factor kills every
  // cross term (distinct supported entries of one column sit in distinct
  // rows), so the lifted block is the diagonal indicator of that column's
  // off-diagonal weights, folded through F.
  const MatrixXd f = selection_matrix(topo_);
  const int lt = topo_.l() - m_;
  std::vector<int> offdiag_col;
  offdiag_col.reserve(lt);
  for (const auto& [mk, nk] : topo_.index_map)
    if (mk != nk) offdiag_col.push_back(nk);
  relay_support_.reserve(n_);
  for (int i = 0; i < n_; ++i) {
    MatrixXd support = MatrixXd::Zero(lt, lt);
    for (int k = 0; k < lt; ++k)
      if (offdiag_col[k] == i) support(k, k) = 1.0;
    relay_support_.push_back(f.transpose() * support * f);
  }
  relay_eps_diag_ = stats.eps_cov.diagonal();
  relay_lh_diag_ = lh.diagonal();

  denom_const_ = stats.sigma_kappa2 * lg.trace() + stats.sigma_fc2;
  denom_const_mean_gain_ =
      stats.sigma_kappa2 * stats.g_mean.squaredNorm() + stats.sigma_fc2;
}

QuadraticCoefficients CoefficientAssembler::at(double s) const {
  if (s < 0.0) throw std::invalid_argument("variance s must be nonnegative");
  QuadraticCoefficients coef;
  coef.s = s;
  coef.omega_n_vec = numerator_vec_;
  coef.omega_n = numerator_vec_ * numerator_vec_.transpose();
  coef.omega_d = omega_d_eps_ + s * omega_d_lh_;
  coef.omega_t.reserve(m_);
  for (int i = 0; i < m_; ++i) {
    MatrixXd t = omega_t2_eps_[i] + s * omega_t2_lh_[i];
    t += (relay_eps_diag_(i) + s * relay_lh_diag_(i)) * relay_support_[i];
    coef.omega_t.push_back(0.5 * (t + t.transpose()));
  }
  coef.omega_c.reserve(n_ - m_);
  for (int i = m_; i < n_; ++i) {
    MatrixXd c = (relay_eps_diag_(i) + s * relay_lh_diag_(i)) * relay_support_[i];
    coef.omega_c.push_back(std::move(c));
  }
  coef.omega_d = 0.5 * (coef.omega_d + coef.omega_d.transpose()).eval();
  coef.denom_const = denom_const_;
  coef.denom_const_mean_gain = denom_const_mean_gain_;
  return coef;
}

QuadraticCoefficients assemble_coefficients(const SystemStatistics& stats,
                                            const Topology& topo, double s) {
  return CoefficientAssembler(stats, topo).at(s);
}

double vectorized_objective(const QuadraticCoefficients& coef, const VectorXd& w) {
  const double num = w.dot(coef.omega_n * w);
  const double den = w.dot(coef.omega_d * w) + coef.denom_const;
  return num / den;
}

VectorXd vectorized_costs(const QuadraticCoefficients& coef,
                          const SystemStatistics& stats, const VectorXd& w) {
  const int m = static_cast<int>(coef.omega_t.size());
  const int n = m + static_cast<int>(coef.omega_c.size());
  VectorXd costs(n);
  for (int i = 0; i < m; ++i)
    costs(i) = w.dot(coef.omega_t[i] * w) + stats.sigma_kappa2;
  for (int i = m; i < n; ++i) costs(i) = w.dot(coef.omega_c[i - m] * w);
  return costs;
}

} // namespace cotrack
