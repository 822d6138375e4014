#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cotrack/model.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numbers>

using namespace cotrack;

TEST_CASE("parameter recursion") {
  CHECK(step_theta(5.0, 0.8, 0.0) == doctest::Approx(4.0));
  CHECK(step_theta(0.0, 0.8, 1.5) == doctest::Approx(1.5));

  double theta = 1.0;
  for (int k = 0; k < 3; ++k) theta = step_theta(theta, 0.8, 0.0);
  CHECK(theta == doctest::Approx(0.512).epsilon(1e-12));
}

TEST_CASE("prior variance recursion and its fixed point") {
  CHECK(prior_variance_step(100.0, 0.8, 0.5) == doctest::Approx(64.5));

  const double s_inf = 0.5 / (1.0 - 0.64);
  CHECK(s_inf == doctest::Approx(1.38889).epsilon(1e-5));
  CHECK(prior_variance_step(s_inf, 0.8, 0.5) == doctest::Approx(s_inf).epsilon(1e-14));

  // From above the fixed point the iteration decreases monotonically and
  // lands within 1e-10 inside 200 steps.
  double s = 100.0;
  int k = 0;
  double prev = s;
  while (std::abs(s - s_inf) > 1e-10 && k < 200) {
    s = prior_variance_step(s, 0.8, 0.5);
    CHECK(s < prev);
    prev = s;
    ++k;
  }
  CHECK(k < 200);
}

TEST_CASE("second moment of the measurement vector") {
  SystemStatistics stats = default_statistics(3, 3);

  SUBCASE("zero signal variance leaves the noise covariance") {
    CHECK(second_moment_x(stats, 0.0).isApprox(stats.eps_cov, 1e-14));
  }

  SUBCASE("rank one case") {
    stats.eps_cov = MatrixXd::Zero(3, 3);
    stats.h_cov = MatrixXd::Zero(3, 3);
    stats.h_mean = VectorXd::Ones(3);
    CHECK(second_moment_x(stats, 2.0).isApprox(2.0 * MatrixXd::Ones(3, 3), 1e-14));
  }

  SUBCASE("default statistics at unit variance") {
    // eps diagonal 1.0 plus pi/2 + (4-pi)/2 = 2.0 from the gains.
    const MatrixXd xx = second_moment_x(stats, 1.0);
    for (int i = 0; i < 3; ++i) CHECK(xx(i, i) == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("gain second moments") {
  SUBCASE("pure mean") {
    SystemStatistics s = default_statistics(2, 2);
    s.g_mean = VectorXd::Unit(2, 0);
    s.g_cov = MatrixXd::Zero(2, 2);
    CHECK(lambda_g(s).isApprox(VectorXd::Unit(2, 0) * VectorXd::Unit(2, 0).transpose(), 1e-14));
  }

  SUBCASE("rayleigh moments") {
    const SystemStatistics s = default_statistics(4, 3);
    const MatrixXd lg = lambda_g(s);
    const MatrixXd lh = lambda_h(s);
    for (int i = 0; i < 3; ++i) CHECK(lg(i, i) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(lg(0, 1) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) CHECK(lh(i, i) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("pure covariance") {
    SystemStatistics s = default_statistics(2, 2);
    s.g_mean = VectorXd::Zero(2);
    s.g_cov = MatrixXd::Identity(2, 2);
    CHECK(lambda_g(s).isApprox(MatrixXd::Identity(2, 2), 1e-14));
  }

  SUBCASE("always symmetric PSD") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
      const SystemStatistics s = testutil::random_statistics(5, 3, rng);
      for (const MatrixXd& mat :
           {lambda_g(s), lambda_h(s), second_moment_x(s, 1.7)}) {
        CHECK(mat.isApprox(mat.transpose(), 1e-12));
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(mat, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
      }
    }
  }
}

TEST_CASE("observe runs the physical chain") {
  SUBCASE("scalar chain by hand") {
    Topology t = Topology::complete(1, 1);
    CollaborationScheme scheme(t, VectorXd::Constant(1, 2.0));
    Realization r;
    r.theta = 3.0;
    r.h = VectorXd::Ones(1);
    r.g = VectorXd::Ones(1);
    r.eps = VectorXd::Zero(1);
    r.kappa = VectorXd::Zero(1);
    r.fc_noise = 0.0;
    const auto [y, z] = observe(r, scheme);
    CHECK(y == doctest::Approx(6.0));
    CHECK(z(0) == doctest::Approx(6.0));
  }

  SUBCASE("zero weights leave only noise") {
    std::mt19937_64 rng(3);
    Topology t = testutil::random_topology(4, 3, 0.6, rng);
    CollaborationScheme scheme = CollaborationScheme::zero(t);
    Realization r;
    r.theta = 1.2;
    r.h = testutil::random_vector(4, rng);
    r.g = testutil::random_vector(3, rng);
    r.eps = testutil::random_vector(4, rng);
    r.kappa = testutil::random_vector(3, rng);
    r.fc_noise = 0.0;
    const auto [y, z] = observe(r, scheme);
    CHECK(y == doctest::Approx(r.g.dot(r.kappa)).epsilon(1e-14));
    CHECK(z.isApprox(r.kappa, 1e-14));
  }

  SUBCASE("noiseless identity") {
    std::mt19937_64 rng(5);
    Topology t = testutil::random_topology(5, 4, 0.5, rng);
    CollaborationScheme scheme = testutil::random_scheme(t, rng);
    Realization r;
    r.theta = -0.7;
    r.h = testutil::random_vector(5, rng);
    r.g = testutil::random_vector(4, rng);
    r.eps = VectorXd::Zero(5);
    r.kappa = VectorXd::Zero(4);
    r.fc_noise = 0.0;
    const auto [y, z] = observe(r, scheme);
    (void)z;
    CHECK(y == doctest::Approx(r.g.dot(scheme.to_matrix() * r.h) * r.theta)
                   .epsilon(1e-12));
  }
}

TEST_CASE("realization sampling") {
  SUBCASE("degenerate distributions return the means") {
    SystemStatistics s = default_statistics(3, 2);
    s.sigma_tau2 = 0.0;
    s.sigma_kappa2 = 0.0;
    s.sigma_fc2 = 0.0;
    s.eps_cov = MatrixXd::Zero(3, 3);
    s.h_cov = MatrixXd::Zero(3, 3);
    s.g_cov = MatrixXd::Zero(2, 2);
    s.s0 = 0.0;
    RealizationSampler sampler(s, GainModel::deterministic, 1.0, 99, 1);
    const Realization r = sampler.next();
    CHECK(r.theta == 0.0);
    CHECK(r.h.isApprox(s.h_mean, 1e-15));
    CHECK(r.g.isApprox(s.g_mean, 1e-15));
    CHECK(r.eps.isZero());
    CHECK(r.kappa.isZero());
    CHECK(r.fc_noise == 0.0);
  }

  SUBCASE("rayleigh sample mean within one percent") {
    SystemStatistics s = default_statistics(1, 1);
    RealizationSampler sampler(s, GainModel::rayleigh, 1.0, 17, 4);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += sampler.next().h(0);
    CHECK(acc / n == doctest::Approx(rayleigh_mean(1.0)).epsilon(0.01));
  }

  SUBCASE("fixed seed reproduces the sequence") {
    const SystemStatistics s = default_statistics(4, 4);
    RealizationSampler a(s, GainModel::rayleigh, 1.0, 1234, 7);
    RealizationSampler b(s, GainModel::rayleigh, 1.0, 1234, 7);
    for (int i = 0; i < 5; ++i) {
      const Realization ra = a.next();
      const Realization rb = b.next();
      CHECK(ra.theta == rb.theta);
      CHECK(ra.h == rb.h);
      CHECK(ra.g == rb.g);
      CHECK(ra.eps == rb.eps);
      CHECK(ra.kappa == rb.kappa);
      CHECK(ra.fc_noise == rb.fc_noise);
    }
    RealizationSampler c(s, GainModel::rayleigh, 1.0, 1234, 8);
    CHECK(c.next().theta != a.next().theta);
  }
}

TEST_CASE("stationary second moment of the parameter chain") {
  // At k = 50 the chain has forgotten s0; the mean of theta^2 over many
  // trials should sit within 3 standard errors of sigma_tau2/(1-alpha^2).
  const SystemStatistics s = default_statistics(1, 1);
  const int trials = 100000;
  const int k_stop = 50;
  double acc = 0.0, acc2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    RealizationSampler sampler(s, GainModel::deterministic, 1.0, 555, t + 1);
    double theta = 0.0;
    for (int k = 0; k < k_stop; ++k) theta = sampler.next().theta;
    acc += theta * theta;
    acc2 += theta * theta * theta * theta;
  }
  const double mean = acc / trials;
  const double se = std::sqrt((acc2 / trials - mean * mean) / trials);
  CHECK(std::abs(mean - s.s_inf()) <= 3.0 * se);
}

TEST_CASE("measurement coefficient is uncorrelated with the effective noise") {
  // u = g'Wh against v = g'W eps + g'kappa + fc over a fixed scheme.
  std::mt19937_64 rng(2024);
  const int n = 4, m = 3;
  SystemStatistics s = default_statistics(n, m);
  const Topology topo = testutil::random_topology(n, m, 0.7, rng);
  const CollaborationScheme scheme = testutil::random_scheme(topo, rng);
  const MatrixXd w = scheme.to_matrix();

  const int samples = 100000;
  RealizationSampler sampler(s, GainModel::rayleigh, 1.0, 777, 1);
  std::vector<double> us(samples), vs(samples);
  for (int i = 0; i < samples; ++i) {
    const Realization r = sampler.next();
    us[i] = r.g.dot(w * r.h);
    vs[i] = r.g.dot(w * r.eps) + r.g.dot(r.kappa) + r.fc_noise;
  }
  double mu = 0.0, mv = 0.0;
  for (int i = 0; i < samples; ++i) {
    mu += us[i];
    mv += vs[i];
  }
  mu /= samples;
  mv /= samples;
  double cuv = 0.0, vu = 0.0, vv = 0.0, v_uv2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double du = us[i] - mu, dv = vs[i] - mv;
    cuv += du * dv;
    vu += du * du;
    vv += dv * dv;
    v_uv2 += du * dv * du * dv;
  }
  cuv /= samples;
  vu /= samples;
  vv /= samples;
  const double corr = cuv / std::sqrt(vu * vv);
  // Standard error of the correlation under dependence-but-uncorrelatedness.
  const double se =
      std::sqrt(v_uv2 / samples - cuv * cuv) / std::sqrt(vu * vv) / std::sqrt(double(samples));
  CHECK(std::abs(corr) <= 3.0 * se);
}

TEST_CASE("expected costs in matrix form") {
  SUBCASE("zero weights cost only the FC noise floor") {
    const SystemStatistics s = default_statistics(3, 2);
    const Topology t = Topology::complete(3, 2);
    const VectorXd costs = expected_costs(CollaborationScheme::zero(t), s, 1.0);
    CHECK(costs(0) == doctest::Approx(s.sigma_kappa2));
    CHECK(costs(1) == doctest::Approx(s.sigma_kappa2));
    CHECK(costs(2) == doctest::Approx(0.0));
  }

  SUBCASE("single sensor pays only its FC term") {
    const SystemStatistics s = default_statistics(1, 1);
    const Topology t = Topology::complete(1, 1);
    CollaborationScheme scheme(t, VectorXd::Constant(1, 1.5));
    const double xx = second_moment_x(s, 2.0)(0, 0);
    const VectorXd costs = expected_costs(scheme, s, 2.0);
    CHECK(costs(0) == doctest::Approx(1.5 * 1.5 * xx + s.sigma_kappa2));
  }
}

TEST_CASE("statistics validation") {
  SystemStatistics s = default_statistics(3, 2);
  CHECK_NOTHROW(s.validate());
  SUBCASE("alpha out of range") {
    s.alpha = 1.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
  SUBCASE("budget margin") {
    s.mu = VectorXd::Constant(3, 0.3); // below eta + sigma_kappa2
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
  SUBCASE("asymmetric covariance") {
    s.eps_cov(0, 1) += 1.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
}

TEST_CASE("topology construction") {
  MatrixXd a(2, 3);
  a << 1, 0, 1,
       1, 1, 0;
  const Topology t = Topology::from_adjacency(a);
  CHECK(t.l() == 4);
  // column-major support order
  CHECK(t.index_map[0] == std::pair<int, int>{0, 0});
  CHECK(t.index_map[1] == std::pair<int, int>{1, 0});
  CHECK(t.index_map[2] == std::pair<int, int>{1, 1});
  CHECK(t.index_map[3] == std::pair<int, int>{0, 2});

  MatrixXd bad(2, 2);
  bad << 0, 1, 1, 1;
  CHECK_THROWS_AS(Topology::from_adjacency(bad), std::invalid_argument);
}
