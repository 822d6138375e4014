// Real-time energy allocation: buffer dynamics, realized transmission costs,
// the beta-scaling policy built on the offline weights, max-consensus, and
// the two per-step greedy designs.
#pragma once

#include "cotrack/model.hpp"
#include "cotrack/offline.hpp"
#include "cotrack/sdp.hpp"
#include "cotrack/vectorize.hpp"

namespace cotrack {

struct EnergyState {
  VectorXd stored; ///< length N, nonnegative

  static EnergyState zero(int n) { return {VectorXd::Zero(n)}; }
};

struct PolicyDecision {
  CollaborationScheme scheme_k;
  double beta = 1.0;
  VectorXd costs;      ///< realized costs of scheme_k on this step's draw
  bool scaled = false; ///< beta < 1
  bool muted = false;  ///< shrink exhausted; sensors stay silent (zero cost)
  int shrink_rounds = 0;
};

/// Realized per-sensor costs: relay cost sum over off-diagonal column
/// weights (W(m,i) x_i)^2 for every sensor, plus z_i^2 for FC sensors.
VectorXd realized_costs(const CollaborationScheme& scheme,
                        const Realization& real, const VectorXd& z);

/// stored <- (stored - consumed)^+ + harvested.
EnergyState update_energy(const EnergyState& state, const VectorXd& consumed,
                          const VectorXd& harvested);

/// The per-step scaling policy: keep the candidate weights when every
/// realized cost fits in the buffer, otherwise scale by
/// beta = min_i min(1, sqrt(S_i / T_i)). Because the additive collaboration
/// noise in z does not scale with the weights, the scaled costs are
/// re-checked and beta shrinks geometrically (factor 0.9) until feasible;
/// if beta falls below 1e-6 the step is muted (W_k = 0, no transmission).
PolicyDecision online_decide(const CollaborationScheme& w_star,
                             const EnergyState& state, const Realization& real);

struct ConsensusResult {
  VectorXd per_node; ///< value held by each sensor after the rounds
  bool agreed = false;
};

/// Synchronous max-consensus on -beta over the undirected support of the
/// topology; after diameter-many rounds every node holds -min_i beta_i and
/// the negation is returned per node. agreed is false when the graph is
/// disconnected and components ended up with different values.
ConsensusResult max_consensus_beta(const VectorXd& local_betas,
                                   const Topology& comm, int rounds);

/// Ratio design at the current prior variance s_k (re-solved every step).
CollaborationScheme greedy_stat_scheme(const SystemStatistics& stats,
                                       const Topology& topo, double s_k,
                                       const SdpOptions& opts = {.tol = 1e-9});

/// Same, reusing a prebuilt assembler for the s-dependent refresh.
CollaborationScheme greedy_stat_scheme(const CoefficientAssembler& assembler,
                                       const SystemStatistics& stats, double s_k,
                                       const SdpOptions& opts = {.tol = 1e-9});

/// Ratio design conditioned on realized gains: the numerator and denominator
/// use h_k, g_k with zero covariances (no prior-variance inflation), the
/// energy constraints keep the statistical moments at the stationary
/// variance.
CollaborationScheme greedy_csi_scheme(const SystemStatistics& stats,
                                      const Topology& topo, const VectorXd& h_k,
                                      const VectorXd& g_k,
                                      const SdpOptions& opts = {.tol = 1e-9});

/// Per-topology planner for the CSI design; precomputes the constraint
/// blocks shared by every step.
class GreedyCsiPlanner {
 public:
  GreedyCsiPlanner(const SystemStatistics& stats, const Topology& topo);

  CollaborationScheme design(const VectorXd& h_k, const VectorXd& g_k,
                             const SdpOptions& opts = {.tol = 1e-9}) const;

 private:
  SystemStatistics stats_;
  Topology topo_;
  QuadraticCoefficients constraint_coef_; ///< statistical, at s_inf
  MatrixXd eps_cov_;
};

} // namespace cotrack
