#include "cotrack/offline.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cotrack {

double f_of_w_at(const CollaborationScheme& scheme,
                 const SystemStatistics& stats, double s) {
  const MatrixXd w = scheme.to_matrix();
  const MatrixXd lg = lambda_g(stats);
  const MatrixXd d = lambda_h(stats) * s + stats.eps_cov;
  const double num = stats.g_mean.dot(w * stats.h_mean);
  const double den = (w * d * w.transpose() * lg).trace() +
                     stats.sigma_kappa2 * lg.trace() + stats.sigma_fc2;
  if (den <= 0.0) throw std::domain_error("ratio denominator is not positive");
  return num * num / den;
}

double f_of_w(const CollaborationScheme& scheme, const SystemStatistics& stats) {
  return f_of_w_at(scheme, stats, stats.s_inf());
}

double c_bar(const CollaborationScheme& scheme, const SystemStatistics& stats) {
  return stats.g_mean.dot(scheme.to_matrix() * stats.h_mean);
}

double d_bar(const CollaborationScheme& scheme, const SystemStatistics& stats) {
  const MatrixXd w = scheme.to_matrix();
  const MatrixXd lg = lambda_g(stats);
  const double s = stats.s_inf();
  const double cb = stats.g_mean.dot(w * stats.h_mean);
  return (w * stats.eps_cov * w.transpose() * lg).trace() +
         stats.sigma_kappa2 * lg.trace() + stats.sigma_fc2 +
         (w * lambda_h(stats) * w.transpose() * lg).trace() * s - cb * cb * s;
}

double riccati_p_inf(double c_bar, double d_bar, double alpha,
                     double sigma_tau2) {
  const double s_inf = sigma_tau2 / (1.0 - alpha * alpha);
  const double c2 = c_bar * c_bar;
  if (c2 == 0.0) return s_inf;
  if (d_bar <= 0.0) return sigma_tau2; // noiseless measurement limit
  const double b = d_bar * (1.0 - alpha * alpha) - c2 * sigma_tau2;
  const double disc = b * b + 4.0 * c2 * sigma_tau2 * d_bar;
  return (-b + std::sqrt(disc)) / (2.0 * c2);
}

double riccati_fixed_point(double c_bar, double d_bar, double alpha,
                           double sigma_tau2, int iterations) {
  const double c2 = c_bar * c_bar;
  double p = sigma_tau2 / (1.0 - alpha * alpha);
  for (int i = 0; i < iterations; ++i)
    p = alpha * alpha * p * d_bar / (c2 * p + d_bar) + sigma_tau2;
  return p;
}

double feasibility_scale(const QuadraticCoefficients& coef,
                         const SystemStatistics& stats, const VectorXd& w) {
  double gamma2 = 1.0;
  const int m = static_cast<int>(coef.omega_t.size());
  const int n = m + static_cast<int>(coef.omega_c.size());
  for (int i = 0; i < n; ++i) {
    const double quad = i < m ? w.dot(coef.omega_t[i] * w)
                              : w.dot(coef.omega_c[i - m] * w);
    const double room =
        i < m ? stats.budget(i) - stats.sigma_kappa2 : stats.budget(i);
    if (quad > 0.0) gamma2 = std::min(gamma2, room / quad);
  }
  return std::sqrt(std::max(0.0, gamma2));
}

OfflineSolution solve_offline(const SystemStatistics& stats,
                              const Topology& topo, const SdpOptions& opts) {
  stats.validate();
  const CoefficientAssembler assembler(stats, topo);
  const QuadraticCoefficients coef = assembler.at(stats.s_inf());

  OfflineSolution out;
  if (coef.omega_n_vec.squaredNorm() <=
      1e-18 * (1.0 + coef.omega_d.norm())) {
    // Zero numerator: any feasible scheme scores zero, take w = 0.
    out.scheme = CollaborationScheme::zero(topo);
  } else {
    const HomogeneousSdp prob = homogenize(coef, stats);
    const SdpSolution sol = solve_sdp(prob, opts);
    if (sol.status != SdpStatus::optimal)
      throw std::runtime_error(std::string("offline solve failed: ") +
                               to_string(sol.status));
    const RankOneRecovery rec = recover_rank_one(sol, prob);
    out.rank_fallback = !rec.rank_ok;
    out.rank_ratio = rec.rank_ratio;
    out.relaxation_bound = sol.objective;

    VectorXd w = rec.w;
    const double gamma = feasibility_scale(coef, stats, w);
    if (gamma < 1.0) {
      w *= gamma;
      out.rescaled = gamma < 1.0 - 1e-9;
    }
    out.scheme = CollaborationScheme(topo, w);
  }

  out.f_value = f_of_w(out.scheme, stats);
  out.p_inf = riccati_p_inf(c_bar(out.scheme, stats), d_bar(out.scheme, stats),
                            stats.alpha, stats.sigma_tau2);
  out.expected_costs = expected_costs(out.scheme, stats, stats.s_inf());
  return out;
}

void save_offline_solution(const OfflineSolution& sol, std::ostream& out) {
  out.precision(17);
  const Topology& t = sol.scheme.topo;
  out << "m " << t.m() << "\nn " << t.n() << "\nl " << t.l() << "\n";
  out << "index_map";
  for (const auto& [i, j] : t.index_map) out << " " << i << " " << j;
  out << "\nw";
  for (int l = 0; l < sol.scheme.w.size(); ++l) out << " " << sol.scheme.w(l);
  out << "\nf_value " << sol.f_value << "\n";
  out << "p_inf " << sol.p_inf << "\n";
}

void save_offline_solution(const OfflineSolution& sol, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  save_offline_solution(sol, out);
}

OfflineSolution load_offline_solution(std::istream& in) {
  auto expect = [&in](const char* key) {
    std::string tok;
    if (!(in >> tok) || tok != key)
      throw std::runtime_error(std::string("bad artifact: expected ") + key);
  };
  int m, n, l;
  expect("m");
  in >> m;
  expect("n");
  in >> n;
  expect("l");
  in >> l;
  expect("index_map");
  MatrixXd a = MatrixXd::Zero(m, n);
  std::vector<std::pair<int, int>> pairs(l);
  for (auto& [i, j] : pairs) {
    in >> i >> j;
    a(i, j) = 1.0;
  }
  expect("w");
  VectorXd w(l);
  for (int k = 0; k < l; ++k) in >> w(k);
  OfflineSolution sol;
  sol.scheme = CollaborationScheme(Topology::from_adjacency(a), w);
  if (sol.scheme.topo.index_map != pairs)
    throw std::runtime_error("bad artifact: index map is not column-major");
  expect("f_value");
  in >> sol.f_value;
  expect("p_inf");
  in >> sol.p_inf;
  if (!in) throw std::runtime_error("bad artifact: truncated");
  return sol;
}

OfflineSolution load_offline_solution(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_offline_solution(in);
}

} // namespace cotrack
