#include "cotrack/sdp.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace cotrack {

const char* to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::max_iterations: return "max-iterations";
    case SdpStatus::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

HomogeneousSdp homogenize(const QuadraticCoefficients& coef,
                          const SystemStatistics& stats,
                          DenomConstant variant) {
  const int l = static_cast<int>(coef.omega_d.rows());
  const int m = static_cast<int>(coef.omega_t.size());
  const int n = m + static_cast<int>(coef.omega_c.size());

  auto block = [l](const MatrixXd& top, double corner) {
    MatrixXd q = MatrixXd::Zero(l + 1, l + 1);
    q.topLeftCorner(l, l) = top;
    q(l, l) = corner;
    return q;
  };

  HomogeneousSdp prob;
  prob.q0 = block(coef.omega_n, 0.0);
  prob.numerator_vec = coef.omega_n_vec;
  prob.q_constraints.reserve(n + 1);
  for (int i = 0; i < m; ++i) {
    prob.q_constraints.push_back(
        block(coef.omega_t[i], stats.sigma_kappa2 - stats.budget(i)));
  }
  for (int i = m; i < n; ++i) {
    prob.q_constraints.push_back(block(coef.omega_c[i - m], -stats.budget(i)));
  }
  const double norm_const = variant == DenomConstant::trace_lambda_g
                                ? coef.denom_const
                                : coef.denom_const_mean_gain;
  prob.q_constraints.push_back(block(coef.omega_d, norm_const));
  prob.rhs = VectorXd::Zero(n + 1);
  prob.rhs(n) = 1.0;
  return prob;
}

namespace {

MatrixXd symmetrize(const MatrixXd& x) { return 0.5 * (x + x.transpose()); }

// Step length min(1, tau * a_max) with a_max the boundary of the PSD cone
// along d from a strictly feasible base. Feasibility in the step is an
// interval, so a Cholesky probe-down plus a short bisection brackets the
// boundary; every candidate is factorization-verified and the fraction
// tau keeps the iterate strictly interior.
double cone_step(const MatrixXd& base, const MatrixXd& d, double tau) {
  auto feasible = [&](double a) {
    return Eigen::LLT<MatrixXd>(base + a * d).info() == Eigen::Success;
  };
  if (feasible(1.0 / tau)) return 1.0;
  double hi = 1.0 / tau;
  double lo = hi;
  bool found = false;
  for (int i = 0; i < 60; ++i) {
    lo *= 0.5;
    if (lo < 1e-13) break;
    if (feasible(lo)) {
      found = true;
      break;
    }
    hi = lo;
  }
  if (!found) return 0.0;
  for (int i = 0; i < 3; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) lo = mid;
    else hi = mid;
  }
  return tau * lo;
}

double orthant_step(const VectorXd& x, const VectorXd& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  return a;
}

// Constraint matrix with its nonzero index support; the energy constraints
// touch only one sensor's weights, so their sandwiches run on sub-blocks.
struct Constraint {
  MatrixXd full;
  std::vector<int> sup;
  MatrixXd block; ///< full(sup, sup)

  explicit Constraint(MatrixXd a) : full(std::move(a)) {
    const int n = static_cast<int>(full.rows());
    for (int i = 0; i < n; ++i)
      if (!full.row(i).isZero(0.0)) sup.push_back(i);
    block.resize(sup.size(), sup.size());
    for (size_t r = 0; r < sup.size(); ++r)
      for (size_t c = 0; c < sup.size(); ++c) block(r, c) = full(sup[r], sup[c]);
  }

  double dot(const MatrixXd& x) const {
    double acc = 0.0;
    for (size_t r = 0; r < sup.size(); ++r)
      for (size_t c = 0; c < sup.size(); ++c) acc += block(r, c) * x(sup[r], sup[c]);
    return acc;
  }

  void add_scaled_to(double y, MatrixXd& x) const {
    for (size_t r = 0; r < sup.size(); ++r)
      for (size_t c = 0; c < sup.size(); ++c) x(sup[r], sup[c]) += y * block(r, c);
  }

  // wfac' * A * wfac through the support rows of wfac.
  MatrixXd sandwich(const MatrixXd& wfac) const {
    MatrixXd rows(sup.size(), wfac.cols());
    for (size_t r = 0; r < sup.size(); ++r) rows.row(r) = wfac.row(sup[r]);
    return rows.transpose() * (block * rows);
  }
};

// min <C,X> s.t. <A_j,X> + s_j = b_j, s >= 0, X PSD. One dense PSD block
// plus a diagonal slack block, both under NT scaling.
class InteriorPoint {
 public:
  InteriorPoint(const MatrixXd& c, const std::vector<MatrixXd>& a,
                const VectorXd& b, const SdpOptions& opts)
      : n_(static_cast<int>(c.rows())),
        m_(static_cast<int>(a.size())),
        c_(c),
        b_(b),
        opts_(opts) {
    a_.reserve(a.size());
    for (const auto& mat : a) a_.emplace_back(mat);
  }

  SdpSolution run() {
    SdpSolution out;
    const double init = std::max({10.0, std::sqrt(double(n_)),
                                  b_.lpNorm<Eigen::Infinity>() * std::sqrt(double(n_))});
    MatrixXd x = init * MatrixXd::Identity(n_, n_);
    VectorXd xl = VectorXd::Constant(m_, init);
    MatrixXd z = std::max(10.0, std::sqrt(double(n_))) * MatrixXd::Identity(n_, n_);
    VectorXd zl = VectorXd::Constant(m_, std::max(10.0, std::sqrt(double(n_))));
    VectorXd y = VectorXd::Zero(m_);

    const double bnorm = 1.0 + b_.lpNorm<Eigen::Infinity>();
    const double cnorm = 1.0 + c_.norm();
    int stalls = 0;

    for (int iter = 1; iter <= opts_.max_iter; ++iter) {
      const double mu = (x.cwiseProduct(z).sum() + xl.dot(zl)) / (n_ + m_);

      VectorXd rp = b_;
      for (int j = 0; j < m_; ++j) rp(j) -= a_[j].dot(x) + xl(j);
      MatrixXd rd = c_ - z;
      for (int j = 0; j < m_; ++j) a_[j].add_scaled_to(-y(j), rd);
      const VectorXd rdl = -y - zl;

      const double pobj = c_.cwiseProduct(x).sum();
      const double dobj = b_.dot(y);
      const double gap = x.cwiseProduct(z).sum() + xl.dot(zl);
      const double rel_gap = gap / (1.0 + std::abs(pobj) + std::abs(dobj));
      const double pres = rp.lpNorm<Eigen::Infinity>() / bnorm;
      const double dres = std::max(rd.norm(), rdl.lpNorm<Eigen::Infinity>()) / cnorm;

      if (opts_.keep_trace)
        out.trace.push_back({pobj, dobj, gap, pres, dres, 0.0, 0.0});

      out.iterations = iter - 1;
      out.duality_gap = rel_gap;
      if (rel_gap < opts_.tol && pres < opts_.tol && dres < opts_.tol) {
        out.status = SdpStatus::optimal;
        out.x = x;
        return out;
      }
      if (y.lpNorm<Eigen::Infinity>() > 1e12 * bnorm) {
        out.status = SdpStatus::infeasible;
        out.x = x;
        return out;
      }

      // NT scaling point W = G (G'ZG)^{-1/2} G' with G the chol factor of X;
      // then W Z W = X. Kept in factored form wfac with W = wfac wfac'.
      Eigen::LLT<MatrixXd> cx(symmetrize(x));
      Eigen::LLT<MatrixXd> cz(symmetrize(z));
      if (cx.info() != Eigen::Success || cz.info() != Eigen::Success) {
        out.status = SdpStatus::numerical_failure;
        out.x = x;
        return out;
      }
      const MatrixXd gfac = cx.matrixL();
      Eigen::SelfAdjointEigenSolver<MatrixXd> gzg(
          symmetrize(gfac.transpose() * z * gfac));
      if (gzg.eigenvalues().minCoeff() <= 0.0) {
        out.status = SdpStatus::numerical_failure;
        out.x = x;
        return out;
      }
      const MatrixXd wfac =
          gfac * gzg.eigenvectors() *
          gzg.eigenvalues().cwiseSqrt().cwiseSqrt().cwiseInverse().asDiagonal();
      const VectorXd wl2 = xl.cwiseQuotient(zl);

      MatrixXd zinv = MatrixXd::Identity(n_, n_);
      cz.solveInPlace(zinv);
      zinv = symmetrize(zinv);

      // Schur complement M_jk = tr(A_j W A_k W) + diag(slack scaling).
      std::vector<MatrixXd> sand(m_);
      for (int j = 0; j < m_; ++j) sand[j] = a_[j].sandwich(wfac);
      MatrixXd schur(m_, m_);
      for (int j = 0; j < m_; ++j) {
        for (int k = 0; k <= j; ++k) {
          schur(j, k) = sand[j].cwiseProduct(sand[k]).sum();
          schur(k, j) = schur(j, k);
        }
      }
      schur.diagonal() += wl2;
      Eigen::LDLT<MatrixXd> schur_fac(schur);
      if (schur_fac.info() != Eigen::Success) {
        out.status = SdpStatus::numerical_failure;
        out.x = x;
        return out;
      }

      const MatrixXd wrdw = wfac * (wfac.transpose() * rd * wfac) * wfac.transpose();

      auto direction = [&](const MatrixXd& rc_d, const VectorXd& rc_l,
                           MatrixXd& dx, VectorXd& dxl, MatrixXd& dz,
                           VectorXd& dzl, VectorXd& dy) {
        VectorXd rhs = rp - rc_l + wl2.cwiseProduct(rdl);
        for (int j = 0; j < m_; ++j)
          rhs(j) += -a_[j].dot(rc_d) + a_[j].dot(wrdw);
        dy = schur_fac.solve(rhs);
        dz = rd;
        for (int j = 0; j < m_; ++j) a_[j].add_scaled_to(-dy(j), dz);
        dzl = rdl - dy;
        dx = symmetrize(rc_d - wfac * (wfac.transpose() * dz * wfac) * wfac.transpose());
        dxl = rc_l - wl2.cwiseProduct(dzl);
      };

      const double tau = 0.98;
      auto primal_step = [&](const MatrixXd& dxm, const VectorXd& dxv) {
        return std::min(cone_step(x, dxm, tau),
                        std::min(1.0, tau * orthant_step(xl, dxv)));
      };
      auto dual_step = [&](const MatrixXd& dzm, const VectorXd& dzv) {
        return std::min(cone_step(z, dzm, tau),
                        std::min(1.0, tau * orthant_step(zl, dzv)));
      };

      // Predictor (affine scaling).
      MatrixXd dx_a, dz_a;
      VectorXd dxl_a, dzl_a, dy_a;
      direction(-x, -xl, dx_a, dxl_a, dz_a, dzl_a, dy_a);

      double ap = primal_step(dx_a, dxl_a);
      double ad = dual_step(dz_a, dzl_a);

      const double mu_aff = ((x + ap * dx_a).cwiseProduct(z + ad * dz_a).sum() +
                             (xl + ap * dxl_a).dot(zl + ad * dzl_a)) /
                            (n_ + m_);
      double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
      sigma = std::clamp(sigma, 1e-10, 1.0);

      // Corrector with the Mehrotra second-order term.
      MatrixXd corr = symmetrize(dx_a * dz_a * zinv);
      MatrixXd rc_d = sigma * mu * zinv - x - corr;
      VectorXd rc_l =
          (sigma * mu) * zl.cwiseInverse() - xl - dxl_a.cwiseProduct(dzl_a).cwiseQuotient(zl);

      MatrixXd dx, dz;
      VectorXd dxl, dzl, dy;
      direction(rc_d, rc_l, dx, dxl, dz, dzl, dy);

      double ap_c = primal_step(dx, dxl);
      double ad_c = dual_step(dz, dzl);

      // If the second-order term backfires, fall back to a centered step.
      if (ap_c < 0.1 * ap || ad_c < 0.1 * ad) {
        rc_d = sigma * mu * zinv - x;
        rc_l = (sigma * mu) * zl.cwiseInverse() - xl;
        direction(rc_d, rc_l, dx, dxl, dz, dzl, dy);
        ap_c = primal_step(dx, dxl);
        ad_c = dual_step(dz, dzl);
      }

      x = symmetrize(x + ap_c * dx);
      xl += ap_c * dxl;
      z = symmetrize(z + ad_c * dz);
      zl += ad_c * dzl;
      y += ad_c * dy;

      if (opts_.keep_trace) {
        out.trace.back().step_primal = ap_c;
        out.trace.back().step_dual = ad_c;
      }
      stalls = (ap_c < 1e-6 && ad_c < 1e-6) ? stalls + 1 : 0;
      if (stalls >= 5) {
        out.status = SdpStatus::numerical_failure;
        out.x = x;
        return out;
      }
    }
    out.status = SdpStatus::max_iterations;
    out.iterations = opts_.max_iter;
    out.x = x;
    return out;
  }

 private:
  int n_, m_;
  MatrixXd c_;
  std::vector<Constraint> a_;
  VectorXd b_;
  SdpOptions opts_;
};

} // namespace

SdpSolution solve_sdp(const HomogeneousSdp& prob, const SdpOptions& opts) {
  const int n = prob.dim();
  const int m = static_cast<int>(prob.q_constraints.size());
  if (static_cast<int>(prob.rhs.size()) != m)
    throw std::invalid_argument("solve_sdp: rhs length must match constraints");

  // Normalize: scale constraints to unit Frobenius norm, objective likewise,
  // and flip the sign for internal minimization.
  const double cscale = std::max(1.0, prob.q0.norm());
  MatrixXd c = -prob.q0 / cscale;
  std::vector<MatrixXd> a(m);
  VectorXd b(m);
  for (int j = 0; j < m; ++j) {
    const double s = std::max(1.0, prob.q_constraints[j].norm());
    a[j] = symmetrize(prob.q_constraints[j]) / s;
    b(j) = prob.rhs(j) / s;
  }

  InteriorPoint ip(symmetrize(c), a, b, opts);
  SdpSolution sol = ip.run();
  sol.objective = prob.q0.cwiseProduct(sol.x).sum();
  if (!sol.trace.empty()) {
    for (auto& it : sol.trace) {
      it.primal_obj *= -cscale;
      it.dual_obj *= -cscale;
    }
  }
  return sol;
}

RankOneRecovery recover_rank_one(const SdpSolution& sol,
                                 const HomogeneousSdp& prob, double rank_tol) {
  if (sol.status != SdpStatus::optimal)
    throw std::runtime_error(std::string("rank-one recovery requires an optimal "
                                         "solution, got status ") +
                             to_string(sol.status));
  const int l = prob.dim() - 1;
  const double corner = sol.x(l, l);
  if (corner < 1e-12)
    throw std::runtime_error("rank-one recovery: degenerate scale (corner "
                             "element below 1e-12)");

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sol.x.topLeftCorner(l, l));
  const VectorXd& ev = es.eigenvalues(); // ascending
  const double l1 = ev(l - 1);
  const double l2 = l >= 2 ? std::max(0.0, ev(l - 2)) : 0.0;
  if (l1 <= 0.0)
    throw std::runtime_error("rank-one recovery: leading block is not positive");

  RankOneRecovery rec;
  rec.rank_ratio = l2 / l1;
  rec.rank_ok = rec.rank_ratio < rank_tol;
  rec.w = std::sqrt(l1) * es.eigenvectors().col(l - 1) / std::sqrt(corner);
  if (prob.numerator_vec.size() == rec.w.size() &&
      rec.w.dot(prob.numerator_vec) < 0.0)
    rec.w = -rec.w;
  return rec;
}

void dump_sdp_debug(const HomogeneousSdp& prob, const SdpSolution& sol,
                    std::ostream& out) {
  auto put_matrix = [&out](const std::string& name, const MatrixXd& mat) {
    out << name << " " << mat.rows() << " " << mat.cols() << "\n";
    for (int i = 0; i < mat.rows(); ++i) {
      for (int j = 0; j < mat.cols(); ++j)
        out << (j ? " " : "") << mat(i, j);
      out << "\n";
    }
  };
  out.precision(17);
  put_matrix("Q0", prob.q0);
  for (size_t j = 0; j < prob.q_constraints.size(); ++j)
    put_matrix("Q" + std::to_string(j + 1), prob.q_constraints[j]);
  out << "rhs";
  for (int j = 0; j < prob.rhs.size(); ++j) out << " " << prob.rhs(j);
  out << "\n";
  put_matrix("X", sol.x);
  out << "status " << to_string(sol.status) << "\n";
  out << "objective " << sol.objective << "\n";
  out << "iterations " << sol.iterations << "\n";
  out << "relative_gap " << sol.duality_gap << "\n";
  out << "trace primal_obj dual_obj gap primal_res dual_res step_p step_d\n";
  for (const auto& it : sol.trace) {
    out << it.primal_obj << " " << it.dual_obj << " " << it.gap << " "
        << it.primal_res << " " << it.dual_res << " " << it.step_primal << " "
        << it.step_dual << "\n";
  }
}

void dump_sdp_debug(const HomogeneousSdp& prob, const SdpSolution& sol,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open debug dump path: " + path);
  dump_sdp_debug(prob, sol, out);
}

} // namespace cotrack
