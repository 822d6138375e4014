#include "cotrack/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace cotrack {

VectorXd realized_costs(const CollaborationScheme& scheme,
                        const Realization& real, const VectorXd& z) {
  const Topology& t = scheme.topo;
  const VectorXd x = real.h * real.theta + real.eps;
  VectorXd costs = VectorXd::Zero(t.n());
  for (int l = 0; l < t.l(); ++l) {
    const auto& [i, j] = t.index_map[l];
    if (i == j) continue;
    const double sent = scheme.w(l) * x(j);
    costs(j) += sent * sent;
  }
  for (int i = 0; i < t.m(); ++i) costs(i) += z(i) * z(i);
  return costs;
}

EnergyState update_energy(const EnergyState& state, const VectorXd& consumed,
                          const VectorXd& harvested) {
  return {(state.stored - consumed).cwiseMax(0.0) + harvested};
}

PolicyDecision online_decide(const CollaborationScheme& w_star,
                             const EnergyState& state, const Realization& real) {
  PolicyDecision d;
  const auto [y0, z0] = observe(real, w_star);
  (void)y0;
  const VectorXd candidate = realized_costs(w_star, real, z0);
  if ((candidate.array() <= state.stored.array()).all()) {
    d.scheme_k = w_star;
    d.costs = candidate;
    return d;
  }

  double beta = 1.0;
  for (int i = 0; i < candidate.size(); ++i) {
    if (candidate(i) > 0.0)
      beta = std::min(beta, std::sqrt(state.stored(i) / candidate(i)));
  }
  d.scaled = true;

  // The kappa term in z does not scale with the weights, so the quadratic
  // scaling law is only a first guess; shrink until the realized costs fit.
  while (beta >= 1e-6) {
    CollaborationScheme trial = w_star.scaled(beta);
    const auto [y, z] = observe(real, trial);
    (void)y;
    VectorXd costs = realized_costs(trial, real, z);
    if ((costs.array() <= state.stored.array()).all()) {
      d.scheme_k = std::move(trial);
      d.beta = beta;
      d.costs = std::move(costs);
      return d;
    }
    beta *= 0.9;
    ++d.shrink_rounds;
  }

  d.muted = true;
  d.beta = 0.0;
  d.scheme_k = CollaborationScheme::zero(w_star.topo);
  d.costs = VectorXd::Zero(w_star.topo.n());
  return d;
}

ConsensusResult max_consensus_beta(const VectorXd& local_betas,
                                   const Topology& comm, int rounds) {
  const int n = comm.n();
  if (local_betas.size() != n)
    throw std::invalid_argument("max_consensus_beta: need one value per sensor");
  VectorXd v = -local_betas;
  for (int r = 0; r < rounds; ++r) {
    VectorXd next = v;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const bool linked = (i < comm.m() && comm.a(i, j) == 1.0) ||
                            (j < comm.m() && comm.a(j, i) == 1.0);
        if (linked) next(i) = std::max(next(i), v(j));
      }
    }
    v = next;
  }
  ConsensusResult res;
  res.per_node = -v;
  res.agreed = (res.per_node.array() == res.per_node(0)).all();
  return res;
}

namespace {

struct RatioDesign {
  CollaborationScheme scheme;
  bool rank_fallback = false;
};

RatioDesign solve_ratio_design(const QuadraticCoefficients& coef,
                               const SystemStatistics& stats,
                               const Topology& topo, const SdpOptions& opts) {
  RatioDesign out;
  if (coef.omega_n_vec.squaredNorm() <= 1e-18 * (1.0 + coef.omega_d.norm())) {
    out.scheme = CollaborationScheme::zero(topo);
    return out;
  }
  const HomogeneousSdp prob = homogenize(coef, stats);
  const SdpSolution sol = solve_sdp(prob, opts);
  if (sol.status != SdpStatus::optimal)
    throw std::runtime_error(std::string("ratio design failed: ") +
                             to_string(sol.status));
  const RankOneRecovery rec = recover_rank_one(sol, prob);
  out.rank_fallback = !rec.rank_ok;
  VectorXd w = rec.w * feasibility_scale(coef, stats, rec.w);
  out.scheme = CollaborationScheme(topo, std::move(w));
  return out;
}

} // namespace

CollaborationScheme greedy_stat_scheme(const CoefficientAssembler& assembler,
                                       const SystemStatistics& stats,
                                       double s_k, const SdpOptions& opts) {
  return solve_ratio_design(assembler.at(s_k), stats, assembler.topology(), opts)
      .scheme;
}

CollaborationScheme greedy_stat_scheme(const SystemStatistics& stats,
                                       const Topology& topo, double s_k,
                                       const SdpOptions& opts) {
  stats.validate();
  return greedy_stat_scheme(CoefficientAssembler(stats, topo), stats, s_k, opts);
}

GreedyCsiPlanner::GreedyCsiPlanner(const SystemStatistics& stats,
                                   const Topology& topo)
    : stats_(stats), topo_(topo), eps_cov_(stats.eps_cov) {
  stats_.validate();
  constraint_coef_ = CoefficientAssembler(stats_, topo_).at(stats_.s_inf());
}

CollaborationScheme GreedyCsiPlanner::design(const VectorXd& h_k,
                                             const VectorXd& g_k,
                                             const SdpOptions& opts) const {
  QuadraticCoefficients coef = constraint_coef_;
  const MatrixXd g_lift = lift_linear(g_k, topo_);
  coef.omega_n_vec = g_lift * h_k;
  coef.omega_n = coef.omega_n_vec * coef.omega_n_vec.transpose();
  coef.omega_d = lift_quadratic(g_k * g_k.transpose(), eps_cov_, topo_);
  coef.denom_const = stats_.sigma_kappa2 * g_k.squaredNorm() + stats_.sigma_fc2;
  coef.denom_const_mean_gain = coef.denom_const;
  coef.s = 0.0;
  return solve_ratio_design(coef, stats_, topo_, opts).scheme;
}

CollaborationScheme greedy_csi_scheme(const SystemStatistics& stats,
                                      const Topology& topo, const VectorXd& h_k,
                                      const VectorXd& g_k,
                                      const SdpOptions& opts) {
  return GreedyCsiPlanner(stats, topo).design(h_k, g_k, opts);
}

} // namespace cotrack
