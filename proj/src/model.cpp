#include "cotrack/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cotrack {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool is_psd(const MatrixXd& x, double tol = 1e-9) {
  if (x.rows() != x.cols()) return false;
  if (!x.isApprox(x.transpose(), 1e-10)) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(x, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * std::max(1.0, x.norm());
}

} // namespace

void SystemStatistics::validate() const {
  require(std::abs(alpha) < 1.0, "alpha must satisfy |alpha| < 1");
  require(sigma_tau2 >= 0.0, "sigma_tau2 must be nonnegative");
  require(sigma_kappa2 >= 0.0, "sigma_kappa2 must be nonnegative");
  require(sigma_fc2 >= 0.0, "sigma_fc2 must be nonnegative");
  require(s0 >= 0.0, "s0 must be nonnegative");
  require(eta > 0.0, "eta must be positive");
  require(n() >= m() && m() >= 1, "need 1 <= M <= N");
  require(h_cov.rows() == n() && h_cov.cols() == n(), "h_cov must be N x N");
  require(g_cov.rows() == m() && g_cov.cols() == m(), "g_cov must be M x M");
  require(eps_cov.rows() == n() && eps_cov.cols() == n(), "eps_cov must be N x N");
  require(mu.size() == n(), "mu must have length N");
  require(is_psd(h_cov), "h_cov must be symmetric PSD");
  require(is_psd(g_cov), "g_cov must be symmetric PSD");
  require(is_psd(eps_cov), "eps_cov must be symmetric PSD");
  for (int i = 0; i < m(); ++i) {
    require(mu(i) - eta - sigma_kappa2 > 0.0,
            "mu_i - eta - sigma_kappa2 must be positive for FC sensors");
  }
  for (int i = m(); i < n(); ++i) {
    require(mu(i) - eta > 0.0, "mu_i - eta must be positive");
  }
}

double rayleigh_mean(double xi) { return xi * std::sqrt(std::numbers::pi / 2.0); }

double rayleigh_var(double xi) { return (4.0 - std::numbers::pi) / 2.0 * xi * xi; }

SystemStatistics default_statistics(int n, int m, double xi) {
  SystemStatistics s;
  s.h_mean = VectorXd::Constant(n, rayleigh_mean(xi));
  s.h_cov = rayleigh_var(xi) * MatrixXd::Identity(n, n);
  s.g_mean = VectorXd::Constant(m, rayleigh_mean(xi));
  s.g_cov = rayleigh_var(xi) * MatrixXd::Identity(m, m);
  s.eps_cov = 0.5 * (MatrixXd::Identity(n, n) + MatrixXd::Ones(n, n));
  s.mu = VectorXd::Constant(n, 10.0);
  return s;
}

Topology Topology::from_adjacency(MatrixXd adjacency) {
  const int m = static_cast<int>(adjacency.rows());
  const int n = static_cast<int>(adjacency.cols());
  require(m >= 1 && n >= m, "topology must satisfy 1 <= M <= N");
  Topology t;
  t.a = std::move(adjacency);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = t.a(i, j);
      require(v == 0.0 || v == 1.0, "topology entries must be 0 or 1");
    }
    require(t.a(i, i) == 1.0, "topology must have self loops on the diagonal");
  }
  // Column-major walk over the support fixes the weight ordering.
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i)
      if (t.a(i, j) == 1.0) t.index_map.emplace_back(i, j);
  return t;
}

Topology Topology::complete(int n, int m) {
  return from_adjacency(MatrixXd::Ones(m, n));
}

bool Topology::undirected_connected() const {
  const int nn = n();
  std::vector<char> seen(nn, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < nn; ++v) {
      if (seen[v] || v == u) continue;
      const bool linked = (u < m() && a(u, v) == 1.0) || (v < m() && a(v, u) == 1.0);
      if (linked) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  for (char c : seen)
    if (!c) return false;
  return true;
}

CollaborationScheme::CollaborationScheme(Topology t, VectorXd weights)
    : topo(std::move(t)), w(std::move(weights)) {
  require(w.size() == topo.l(), "weight vector length must match topology support");
}

CollaborationScheme CollaborationScheme::zero(const Topology& t) {
  return CollaborationScheme(t, VectorXd::Zero(t.l()));
}

MatrixXd CollaborationScheme::to_matrix() const {
  MatrixXd mat = MatrixXd::Zero(topo.m(), topo.n());
  for (int l = 0; l < topo.l(); ++l) {
    const auto [i, j] = topo.index_map[l];
    mat(i, j) = w(l);
  }
  return mat;
}

CollaborationScheme CollaborationScheme::scaled(double factor) const {
  return CollaborationScheme(topo, factor * w);
}

double step_theta(double theta_prev, double alpha, double tau) {
  return alpha * theta_prev + tau;
}

double prior_variance_step(double s_prev, double alpha, double sigma_tau2) {
  return alpha * alpha * s_prev + sigma_tau2;
}

MatrixXd second_moment_x(const SystemStatistics& stats, double s) {
  MatrixXd x = stats.eps_cov +
               s * (stats.h_mean * stats.h_mean.transpose() + stats.h_cov);
  return 0.5 * (x + x.transpose());
}

MatrixXd lambda_g(const SystemStatistics& stats) {
  MatrixXd x = stats.g_mean * stats.g_mean.transpose() + stats.g_cov;
  return 0.5 * (x + x.transpose());
}

MatrixXd lambda_h(const SystemStatistics& stats) {
  MatrixXd x = stats.h_mean * stats.h_mean.transpose() + stats.h_cov;
  return 0.5 * (x + x.transpose());
}

VectorXd expected_costs(const CollaborationScheme& scheme,
                        const SystemStatistics& stats, double s) {
  const MatrixXd w = scheme.to_matrix();
  const MatrixXd xx = second_moment_x(stats, s);
  const int n = stats.n();
  const int m = stats.m();
  VectorXd costs = VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    double relay = 0.0;
    for (int i = 0; i < m; ++i)
      if (i != j) relay += w(i, j) * w(i, j);
    costs(j) = xx(j, j) * relay;
  }
  const MatrixXd wxw = w * xx * w.transpose();
  for (int i = 0; i < m; ++i) costs(i) += wxw(i, i) + stats.sigma_kappa2;
  return costs;
}

std::pair<double, VectorXd> observe(const Realization& real,
                                    const CollaborationScheme& scheme) {
  const VectorXd x = real.h * real.theta + real.eps;
  const VectorXd z = scheme.to_matrix() * x + real.kappa;
  const double y = real.g.dot(z) + real.fc_noise;
  return {y, z};
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial,
                          std::uint64_t source) {
  // splitmix64 finalizer applied to a running combination.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  h = mix(h ^ (trial * 0xd1342543de82ef95ULL + 1));
  h = mix(h ^ (source * 0xaf251af3b0f025b5ULL + 1));
  return h;
}

std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t trial,
                            RandomSource source) {
  return std::mt19937_64(
      derive_seed(master, trial, static_cast<std::uint64_t>(source)));
}

MvnSampler::MvnSampler(const MatrixXd& cov) {
  if (cov.norm() == 0.0) {
    transform_ = MatrixXd::Zero(cov.rows(), cov.cols());
    return;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  transform_ = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

VectorXd MvnSampler::draw(std::mt19937_64& rng) const {
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd u(transform_.cols());
  for (int i = 0; i < u.size(); ++i) u(i) = gauss(rng);
  return transform_ * u;
}

RealizationSampler::RealizationSampler(const SystemStatistics& stats,
                                       GainModel model, double xi,
                                       std::uint64_t master_seed,
                                       std::uint64_t trial)
    : stats_(stats),
      model_(model),
      xi_(xi),
      eps_sampler_(stats.eps_cov),
      theta_rng_(make_stream(master_seed, trial, RandomSource::theta)),
      h_rng_(make_stream(master_seed, trial, RandomSource::gain_h)),
      g_rng_(make_stream(master_seed, trial, RandomSource::gain_g)),
      eps_rng_(make_stream(master_seed, trial, RandomSource::meas_noise)),
      kappa_rng_(make_stream(master_seed, trial, RandomSource::collab_noise)),
      fc_rng_(make_stream(master_seed, trial, RandomSource::fc_noise)) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  theta_ = stats.s0 > 0.0 ? std::sqrt(stats.s0) * gauss(theta_rng_) : 0.0;
}

namespace {

VectorXd draw_gains(GainModel model, double xi, const VectorXd& mean,
                    const MatrixXd& cov, std::mt19937_64& rng) {
  const int n = static_cast<int>(mean.size());
  VectorXd out(n);
  switch (model) {
    case GainModel::rayleigh: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int i = 0; i < n; ++i) {
        double u = unif(rng);
        if (u >= 1.0) u = std::nextafter(1.0, 0.0);
        out(i) = xi * std::sqrt(-2.0 * std::log1p(-u));
      }
      return out;
    }
    case GainModel::gaussian: {
      MvnSampler mvn(cov);
      return mean + mvn.draw(rng);
    }
    case GainModel::deterministic:
      return mean;
  }
  return out;
}

} // namespace

Realization RealizationSampler::next() {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Realization r;
  const double tau =
      stats_.sigma_tau2 > 0.0 ? std::sqrt(stats_.sigma_tau2) * gauss(theta_rng_) : 0.0;
  theta_ = step_theta(theta_, stats_.alpha, tau);
  r.theta = theta_;
  r.h = draw_gains(model_, xi_, stats_.h_mean, stats_.h_cov, h_rng_);
  r.g = draw_gains(model_, xi_, stats_.g_mean, stats_.g_cov, g_rng_);
  r.eps = eps_sampler_.draw(eps_rng_);
  r.kappa = VectorXd(stats_.m());
  const double kappa_sd = std::sqrt(stats_.sigma_kappa2);
  for (int i = 0; i < stats_.m(); ++i) r.kappa(i) = kappa_sd * gauss(kappa_rng_);
  r.fc_noise = std::sqrt(stats_.sigma_fc2) * gauss(fc_rng_);
  return r;
}

} // namespace cotrack
