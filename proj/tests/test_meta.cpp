#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pinnopt/meta.hpp"
#include "pinnopt/rng.hpp"

using namespace pinnopt;

namespace {

MlpSpec tiny_net(int input) {
  MlpSpec s;
  s.layer_widths = {input, 8, 1};
  s.activation = Activation::tanh;
  return s;
}

// Deterministic toy for estimator checks: two meta-parameters, linear inner
// dynamics x <- x - 0.3 (x - theta), window loss ||x - target||^2, horizon 3.
struct QuadraticToy {
  Eigen::Vector2d x0{1.0, -0.5};
  Eigen::Vector2d target{0.2, 0.4};

  // Mean loss over the 3 inner steps.
  double objective(const Eigen::Vector2d& theta) const {
    Eigen::Vector2d x = x0;
    double acc = 0;
    for (int j = 0; j < 3; ++j) {
      x = x - 0.3 * (x - theta);
      acc += (x - target).squaredNorm();
    }
    return acc / 3.0;
  }

  // One full PES pass (3 unrolls of K = 1) with antithetic particles;
  // returns the summed per-window estimates divided by the horizon, an
  // estimate of the gradient of the mean loss.
  Eigen::Vector2d pes_trial(const Eigen::Vector2d& theta, double sigma, Rng& rng) const {
    Eigen::Vector2d xp = x0, xm = x0;
    Eigen::Vector2d xi_cum = Eigen::Vector2d::Zero();
    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector2d eps(sigma * rng.normal(), sigma * rng.normal());
      xi_cum += eps;
      Eigen::Vector2d tp = theta + eps, tm = theta - eps;
      xp = xp - 0.3 * (xp - tp);
      xm = xm - 0.3 * (xm - tm);
      double lp = (xp - target).squaredNorm();
      double lm = (xm - target).squaredNorm();
      std::array<double, 2> losses{lp, lm};
      std::array<Eigen::VectorXd, 2> xis{Eigen::VectorXd(xi_cum), Eigen::VectorXd(-xi_cum)};
      auto g = pes_gradient(losses, xis, sigma);
      REQUIRE(g.has_value());
      total += *g;
    }
    return total / 3.0;
  }
};

}  // namespace

TEST_CASE("pes gradient basics") {
  Eigen::VectorXd xi(3);
  xi << 0.1, -0.2, 0.3;
  std::array<Eigen::VectorXd, 2> xis{xi, Eigen::VectorXd(-xi)};

  // Antithetic pair with equal losses cancels exactly.
  std::array<double, 2> equal{1.7, 1.7};
  auto g = pes_gradient(equal, xis, 0.1);
  REQUIRE(g.has_value());
  CHECK(g->cwiseAbs().maxCoeff() == 0.0);

  // Even loss in the perturbation: same thing per pair.
  std::array<double, 2> even{std::sin(0.3), std::sin(0.3)};
  CHECK(pes_gradient(even, xis, 0.1)->cwiseAbs().maxCoeff() == 0.0);

  // Non-finite losses are flagged, not silently used.
  std::array<double, 2> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK(!pes_gradient(bad, xis, 0.1).has_value());
}

TEST_CASE("pes estimator is unbiased on a linear scalar loss") {
  // L(theta) = a theta: the first-step pair estimate is a xi^2 / sigma^2
  // with mean a. Cross-check the mean over many fresh pairs to 3 SEs.
  const double a = 2.3, sigma = 0.1, theta = 0.7;
  Rng rng(123);
  const int trials = 100000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < trials; ++i) {
    Eigen::VectorXd xi(1);
    xi << sigma * rng.normal();
    std::array<double, 2> losses{a * (theta + xi(0)), a * (theta - xi(0))};
    std::array<Eigen::VectorXd, 2> xis{xi, Eigen::VectorXd(-xi)};
    double g = (*pes_gradient(losses, xis, sigma))(0);
    sum += g;
    sum_sq += g * g;
  }
  double mean = sum / trials;
  double se = std::sqrt((sum_sq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - a) <= 3.0 * se);
}

TEST_CASE("sigma scaling leaves linear-loss estimates unchanged") {
  const double a = -1.4, theta = 0.2;
  Eigen::VectorXd z(1);
  z << 0.83;  // fixed unit draw
  for (double sigma : {0.05, 0.1}) {
    Eigen::VectorXd xi = sigma * z;
    std::array<double, 2> losses{a * (theta + xi(0)), a * (theta - xi(0))};
    std::array<Eigen::VectorXd, 2> xis{xi, Eigen::VectorXd(-xi)};
    double g = (*pes_gradient(losses, xis, sigma))(0);
    CHECK(g == doctest::Approx(a * z(0) * z(0)).epsilon(1e-12));
  }
}

TEST_CASE("pes matches the finite-difference meta-gradient on the quadratic toy") {
  QuadraticToy toy;
  Eigen::Vector2d theta(0.1, -0.3);

  Eigen::Vector2d fd;
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d tp = theta, tm = theta;
    tp(i) += h;
    tm(i) -= h;
    fd(i) = (toy.objective(tp) - toy.objective(tm)) / (2 * h);
  }

  Rng rng(2025);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) mean += toy.pes_trial(theta, 0.1, rng);
  mean /= trials;

  CHECK((mean - fd).norm() <= 0.1 * fd.norm());
}

TEST_CASE("full-horizon pes reduces to vanilla antithetic es") {
  // K equal to the whole horizon: one window, xi_cum is the single draw, so
  // the estimate must equal the vanilla formula evaluated directly.
  QuadraticToy toy;
  Eigen::Vector2d theta(0.4, 0.1);
  const double sigma = 0.05;
  Rng rng(9);
  Eigen::Vector2d eps(sigma * rng.normal(), sigma * rng.normal());

  auto unroll3 = [&](const Eigen::Vector2d& th) {
    Eigen::Vector2d x = toy.x0;
    double acc = 0;
    for (int j = 0; j < 3; ++j) {
      x = x - 0.3 * (x - th);
      acc += (x - toy.target).squaredNorm();
    }
    return acc / 3.0;
  };
  std::array<double, 2> losses{unroll3(theta + eps), unroll3(theta - eps)};
  std::array<Eigen::VectorXd, 2> xis{Eigen::VectorXd(eps), Eigen::VectorXd(-eps)};
  auto pes = pes_gradient(losses, xis, sigma);
  REQUIRE(pes.has_value());

  Eigen::Vector2d vanilla = eps * (losses[0] - losses[1]) / (2.0 * sigma * sigma);
  CHECK((*pes - vanilla).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("task sampling is deterministic and in-family") {
  TaskDistribution kdv;
  kdv.kind = TaskKind::kdv_ic_family;
  kdv.base_problem = "kdv";
  kdv.net = tiny_net(3);
  for (int i = 0; i < 30; ++i) {
    Task t = sample_task(kdv, i, 42);
    int k = t.descriptor.at("k").get<int>();
    double phi = t.descriptor.at("phi").get<double>();
    CHECK(k >= 1);
    CHECK(k <= 3);
    CHECK(phi >= -std::numbers::pi / 2);
    CHECK(phi <= std::numbers::pi / 2);
    Task again = sample_task(kdv, i, 42);
    CHECK(t.params0 == again.params0);
    CHECK(again.descriptor.at("k").get<int>() == k);
  }

  TaskDistribution adv;
  adv.kind = TaskKind::advection_velocity_family;
  adv.base_problem = "advection";
  adv.net = tiny_net(3);
  for (int i = 0; i < 30; ++i) {
    Task t = sample_task(adv, i, 7);
    double c = t.descriptor.at("c").get<double>();
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(t.problem.advection_c == c);
  }

  TaskDistribution re;
  re.kind = TaskKind::reinit_only;
  re.base_problem = "advection";
  re.net = tiny_net(3);
  Task t0 = sample_task(re, 0, 5);
  Task t1 = sample_task(re, 1, 5);
  CHECK(t0.problem.name == t1.problem.name);
  CHECK(t0.problem.advection_c == t1.problem.advection_c);
  CHECK(t0.params0 != t1.params0);  // fresh weights per task
}

TEST_CASE("meta_train determinism and zero-epoch identity") {
  TaskDistribution dist;
  dist.kind = TaskKind::reinit_only;
  dist.base_problem = "advection";
  dist.net = tiny_net(3);

  MetaConfig cfg;
  cfg.n_tasks = 2;
  cfg.meta_epochs = 2;
  cfg.sigma = 0.01;
  cfg.alpha = 1e-3;
  cfg.seed = 99;

  InnerSetup inner;
  inner.counts = {40, 10, 0};
  inner.train.epochs = 4;
  inner.train.minibatches = 2;
  inner.lambda = {1e-3, 1e-3, 1e-3, 1e-3};

  MetaResult a = meta_train(dist, cfg, inner);
  MetaResult b = meta_train(dist, cfg, inner);
  CHECK(a.checkpoint.theta == b.checkpoint.theta);  // bit-reproducible
  CHECK(a.log.size() == 4);
  CHECK(a.log[0].grad_norm >= 0.0);

  MetaConfig zero = cfg;
  zero.meta_epochs = 0;
  MetaResult z = meta_train(dist, zero, inner);
  CHECK(z.checkpoint.theta == meta_initial_theta(cfg.seed));
  CHECK(z.log.empty());

  // Training moved the weights.
  CHECK(a.checkpoint.theta != z.checkpoint.theta);
  CHECK(a.checkpoint.provenance.at("n_tasks").get<int>() == 2);
}
