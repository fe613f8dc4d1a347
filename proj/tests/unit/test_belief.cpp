#include <doctest.h>

#include <cmath>
#include <random>

#include "narxmpc/belief.hpp"
#include "support/oracles.hpp"

using namespace narxmpc;

namespace {

NormalGammaBelief<double> reference_prior() {
  NormalGammaBelief<double> b;
  b.mean = (Eigen::VectorXd(2) << 1.0, 1.0).finished();
  b.precision = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  b.shape = 10.0;
  b.rate = 1.0;
  return b;
}

NormalGammaBelief<double> random_belief(std::mt19937_64& rng, Index dim) {
  std::uniform_real_distribution<double> unif(0.2, 4.0);
  std::normal_distribution<double> normal;
  NormalGammaBelief<double> b;
  b.mean.resize(dim);
  for (Index i = 0; i < dim; ++i) b.mean[i] = normal(rng);
  Eigen::MatrixXd a(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) a(i, j) = normal(rng);
  }
  b.precision = a * a.transpose() + unif(rng) * Eigen::MatrixXd::Identity(dim, dim);
  b.shape = 1.5 + unif(rng);
  b.rate = unif(rng);
  return b;
}

}  // namespace

TEST_CASE("update: shape always gains one half") {
  auto b = reference_prior();
  const Eigen::VectorXd phi = (Eigen::VectorXd(2) << 0.3, -1.1).finished();
  const auto post = update(b, phi, 0.7);
  CHECK(post.shape == 10.5);
}

TEST_CASE("update: a zero regressor carries no coefficient information") {
  auto b = reference_prior();
  const Eigen::VectorXd phi = Eigen::VectorXd::Zero(2);
  const auto post = update(b, phi, 0.0);
  // The mean goes through a factorized solve, so identity holds to roundoff.
  CHECK((post.mean - b.mean).lpNorm<Eigen::Infinity>() < 1e-15);
  CHECK((post.precision - b.precision).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(post.shape == b.shape + 0.5);
  CHECK(post.rate == doctest::Approx(b.rate).epsilon(1e-15));
}

TEST_CASE("update: posterior moments match dense grid quadrature") {
  // One filter step of the two-parameter linear-experiment model. The oracle
  // integrates likelihood x prior over a (theta1, theta2, tau) grid, entirely
  // from the prior parameters.
  const auto prior = reference_prior();
  const Eigen::VectorXd phi = (Eigen::VectorXd(2) << 0.0, 0.96).finished();
  const double y = -0.48;

  const auto post = update(prior, phi, y);
  const auto marginal = marginal_coefficients(post);
  const Eigen::MatrixXd analytic_cov =
      marginal.scale * marginal.dof / (marginal.dof - 2.0);
  const double analytic_tau_mean = post.shape / post.rate;

  // Pass 1: prior-informed wide boxes. Pass 2: re-centered on the pass-1
  // moment estimates.
  auto run = [&](const Eigen::Vector2d& r1, const Eigen::Vector2d& r2,
                 const Eigen::Vector2d& rt, int n) {
    return oracles::grid_posterior_moments_2d(prior.mean, prior.precision,
                                              prior.shape, prior.rate, phi, y,
                                              r1, r2, rt, n);
  };
  const auto pass1 = run({-4.0, 6.0}, {-4.0, 6.0}, {1e-4, 42.0}, 240);
  auto window = [](double mean, double sd) {
    return Eigen::Vector2d(mean - 10.0 * sd, mean + 10.0 * sd);
  };
  const double sd1 = std::sqrt(pass1.theta_cov(0, 0));
  const double sd2 = std::sqrt(pass1.theta_cov(1, 1));
  const double tau_sd = std::sqrt(analytic_tau_mean);  // coarse scale only
  const auto pass2 =
      run(window(pass1.theta_mean[0], sd1), window(pass1.theta_mean[1], sd2),
          {std::max(1e-6, pass1.tau_mean - 10.0 * tau_sd),
           pass1.tau_mean + 10.0 * tau_sd},
          240);

  for (Index i = 0; i < 2; ++i) {
    CHECK(post.mean[i] ==
          doctest::Approx(pass2.theta_mean[i]).epsilon(1e-6));
    for (Index j = 0; j < 2; ++j) {
      CHECK(analytic_cov(i, j) ==
            doctest::Approx(pass2.theta_cov(i, j)).epsilon(1e-6));
    }
  }
  CHECK(analytic_tau_mean == doctest::Approx(pass2.tau_mean).epsilon(1e-6));
}

TEST_CASE("marginals: direct parameter maps") {
  const auto b = reference_prior();
  const auto theta = marginal_coefficients(b);
  CHECK(theta.dof == 20.0);
  CHECK((theta.location - b.mean).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((theta.scale - 0.2 * Eigen::MatrixXd::Identity(2, 2))
            .lpNorm<Eigen::Infinity>() < 1e-15);

  const auto tau = marginal_precision(b);
  CHECK(tau.shape == 10.0);
  CHECK(tau.rate == 1.0);
}

TEST_CASE("marginal_coefficients matches Monte-Carlo moments of the joint") {
  const auto b = reference_prior();
  const auto marginal = marginal_coefficients(b);
  const Eigen::MatrixXd cov = marginal.scale * marginal.dof / (marginal.dof - 2.0);

  constexpr int kSamples = 1'000'000;
  oracles::NormalGammaSampler sampler(b.mean, b.precision, b.shape, b.rate, 101);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sum_sq = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d sum_4th = Eigen::Matrix2d::Zero();  // for SE of cov entries
  std::vector<Eigen::Vector2d> draws;
  draws.reserve(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    const auto [theta, tau] = sampler();
    draws.push_back(theta);
    sum += theta;
  }
  const Eigen::Vector2d mean = sum / kSamples;
  for (const auto& theta : draws) {
    const Eigen::Vector2d d = theta - mean;
    sum_sq += d * d.transpose();
    sum_4th += (d * d.transpose()).cwiseProduct(d * d.transpose());
  }
  const Eigen::Matrix2d sample_cov = sum_sq / (kSamples - 1);

  for (Index i = 0; i < 2; ++i) {
    const double se_mean = std::sqrt(sample_cov(i, i) / kSamples);
    CHECK(std::abs(mean[i] - marginal.location[i]) < 3.0 * se_mean);
    for (Index j = 0; j < 2; ++j) {
      const double se_cov = std::sqrt(
          std::max(sum_4th(i, j) / kSamples - std::pow(sample_cov(i, j), 2), 0.0) /
          kSamples);
      CHECK(std::abs(sample_cov(i, j) - cov(i, j)) < 3.0 * se_cov);
    }
  }
}

TEST_CASE("joint_entropy matches nested quadrature for D = 1") {
  NormalGammaBelief<double> b;
  b.mean = Eigen::VectorXd::Zero(1);
  b.precision = Eigen::MatrixXd::Identity(1, 1);
  b.shape = 1.0;
  b.rate = 1.0;

  // Outer tau quadrature in log space (the integrand has an integrable
  // logarithmic singularity at tau = 0); inner theta quadrature with
  // tau-adapted support.
  auto inner = [&](double tau) {
    const double sd = 1.0 / std::sqrt(tau);
    const double lo = -14.0 * sd, hi = 14.0 * sd;
    return oracles::simpson(
        [&](double theta) {
          const double lp = oracles::normal_gamma_log_density(
              Eigen::VectorXd::Constant(1, theta), tau, b.mean, b.precision,
              b.shape, b.rate);
          return -lp * std::exp(lp);
        },
        lo, hi, 4000);
  };
  const double quad = oracles::simpson(
      [&](double v) {
        const double tau = std::exp(v);
        return inner(tau) * tau;  // d tau = tau dv
      },
      std::log(1e-13), std::log(45.0), 20000);
  CHECK(std::abs(joint_entropy(b) - quad) < 1e-4);
}

TEST_CASE("joint_entropy: scaling and translation invariance") {
  auto b = reference_prior();
  const double base = joint_entropy(b);
  CHECK(std::isfinite(base));

  auto scaled = b;
  scaled.precision = 3.7 * b.precision;
  CHECK(joint_entropy(scaled) - base ==
        doctest::Approx(-0.5 * 2 * std::log(3.7)).epsilon(1e-12));

  auto moved = b;
  moved.mean = (Eigen::VectorXd(2) << -41.0, 7.5).finished();
  CHECK(joint_entropy(moved) == base);
}

TEST_CASE("log_evidence: maximized at the predictive mode") {
  const auto b = reference_prior();
  const Eigen::VectorXd phi = (Eigen::VectorXd(2) << 0.4, -0.8).finished();
  const double mode = b.mean.dot(phi);
  const double at_mode = log_evidence(b, phi, mode);
  for (double d : {0.05, 0.3, 1.0, 5.0}) {
    CHECK(log_evidence(b, phi, mode + d) < at_mode);
    CHECK(log_evidence(b, phi, mode - d) < at_mode);
  }
}

TEST_CASE("log_evidence matches a Monte-Carlo estimate of the marginal") {
  const auto b = reference_prior();
  const Eigen::VectorXd phi = (Eigen::VectorXd(2) << 0.0, 0.96).finished();
  const double y = -0.48;

  constexpr int kSamples = 1'000'000;
  oracles::NormalGammaSampler sampler(b.mean, b.precision, b.shape, b.rate, 103);
  std::vector<double> densities;
  densities.reserve(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    const auto [theta, tau] = sampler();
    densities.push_back(
        std::exp(oracles::gaussian_log_density(y, theta.dot(phi), 1.0 / tau)));
  }
  const auto est = oracles::estimate_moments(densities);
  CHECK(std::abs(std::exp(log_evidence(b, phi, y)) - est.mean) <
        3.0 * est.mean_std_error);
}

TEST_CASE("log_evidence integrates to one over the output axis") {
  const auto b = reference_prior();
  const Eigen::VectorXd phi = (Eigen::VectorXd(2) << 0.5, -1.2).finished();
  const double mode = b.mean.dot(phi);
  const double mass = oracles::simpson(
      [&](double y) { return std::exp(log_evidence(b, phi, y)); }, mode - 60.0,
      mode + 60.0, 200000);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("update keeps all belief invariants on random inputs") {
  std::mt19937_64 rng(211);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const Index dim = 1 + trial % 4;
    auto b = random_belief(rng, dim);
    Eigen::VectorXd phi(dim);
    for (Index i = 0; i < dim; ++i) phi[i] = normal(rng);
    const double y = normal(rng);
    const auto post = update(b, phi, y);
    CHECK_NOTHROW(validate(post));
    CHECK(post.shape == b.shape + 0.5);
    CHECK(post.rate > 0.0);

    // Appendix-A consistency: xi' P'^-1 xi = mean' P' mean'.
    const Eigen::VectorXd xi = phi * y + b.precision * b.mean;
    const double lhs = xi.dot(post.precision.llt().solve(xi));
    const double rhs = post.mean.dot(post.precision * post.mean);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("sequential updates equal the stacked batch posterior") {
  std::mt19937_64 rng(223);
  std::normal_distribution<double> normal;
  const Index dim = 3;
  auto prior = random_belief(rng, dim);
  constexpr int kSteps = 50;

  auto sequential = prior;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(dim);
  double yty = 0.0;
  for (int k = 0; k < kSteps; ++k) {
    Eigen::VectorXd phi(dim);
    for (Index i = 0; i < dim; ++i) phi[i] = normal(rng);
    const double y = normal(rng);
    sequential = update(sequential, phi, y);
    gram += phi * phi.transpose();
    xty += phi * y;
    yty += y * y;
  }

  const Eigen::MatrixXd precision = prior.precision + gram;
  const Eigen::VectorXd mean =
      precision.llt().solve(xty + prior.precision * prior.mean);
  const double shape = prior.shape + 0.5 * kSteps;
  const double rate = prior.rate +
                      0.5 * (yty - mean.dot(precision * mean) +
                             prior.mean.dot(prior.precision * prior.mean));

  CHECK((sequential.precision - precision).norm() / precision.norm() < 1e-8);
  CHECK((sequential.mean - mean).norm() / mean.norm() < 1e-8);
  CHECK(sequential.shape == shape);
  CHECK(sequential.rate == doctest::Approx(rate).epsilon(1e-8));
}

TEST_CASE("posterior concentrates on the generating coefficients") {
  // Data from the linear experiment's system with noise precision 100.
  const Eigen::Vector2d truth(0.5, -0.5);
  std::mt19937_64 rng(227);
  std::uniform_real_distribution<double> inputs(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.1);

  auto belief = reference_prior();
  double y_prev = 0.0;
  double err_at_5 = 0.0;
  double density_at_5 = 0.0;
  for (int k = 1; k <= 50; ++k) {
    const double u = inputs(rng);
    const Eigen::VectorXd phi = (Eigen::VectorXd(2) << y_prev, u).finished();
    const double y = truth.dot(phi) + noise(rng);
    belief = update(belief, phi, y);
    y_prev = y;
    if (k == 5) {
      err_at_5 = (belief.mean - truth).norm();
      const auto m = marginal_coefficients(belief);
      density_at_5 =
          oracles::multivariate_t_log_density(truth, m.location, m.scale, m.dof);
    }
  }
  const double err_at_50 = (belief.mean - truth).norm();
  const auto m = marginal_coefficients(belief);
  const double density_at_50 =
      oracles::multivariate_t_log_density(truth, m.location, m.scale, m.dof);

  CHECK(err_at_50 < err_at_5);
  CHECK(density_at_50 > density_at_5);
}

TEST_CASE("validation rejects broken beliefs") {
  auto b = reference_prior();
  b.precision(0, 1) = 5.0;  // asymmetric and indefinite
  b.precision(1, 0) = 5.0;
  b.precision(0, 0) = 0.1;
  CHECK_THROWS_AS(validate(b), std::runtime_error);

  auto bad_shape = reference_prior();
  bad_shape.shape = 0.0;
  CHECK_THROWS_AS(validate(bad_shape), std::invalid_argument);

  auto bad_phi = reference_prior();
  CHECK_THROWS_AS(update(bad_phi, Eigen::VectorXd::Zero(3), 0.0),
                  std::invalid_argument);
}
