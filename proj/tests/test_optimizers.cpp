#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "pinnopt/optimizers.hpp"
#include "pinnopt/rng.hpp"

using namespace pinnopt;

namespace {

// Independent scalar Adam, coded straight from the update equations.
struct ScalarAdam {
  double m = 0, v = 0;
  long t = 0;
  double step(double theta, double g, double eta, double b1 = 0.9, double b2 = 0.999,
              double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    double mhat = m / (1 - std::pow(b1, static_cast<double>(t)));
    double vhat = v / (1 - std::pow(b2, static_cast<double>(t)));
    return theta - eta * mhat / (std::sqrt(vhat) + eps);
  }
};

OptimizerCheckpoint zero_head_checkpoint(std::array<double, 4> lambda) {
  OptimizerCheckpoint ckpt;
  ckpt.theta = mlp_init(optimizer_mlp_spec(), 7, 0.0);  // output layer exactly zero
  ckpt.lambda = lambda;
  return ckpt;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("adam first step and zero gradient") {
  AdamState st;
  st.eta = 1e-3;
  ParamVector p(2);
  p << 1.0, -0.5;
  Eigen::VectorXd g(2);
  g << 0.3, -2.0;
  ParamVector p0 = p;
  adam_step(st, p, g);
  // At t = 1 the bias corrections cancel: update = eta * g / (|g| + eps).
  for (int i = 0; i < 2; ++i)
    CHECK(p(i) == doctest::Approx(p0(i) - 1e-3 * g(i) / (std::abs(g(i)) + 1e-8)).epsilon(1e-14));

  AdamState fresh;
  ParamVector q(2);
  q << 0.2, 0.4;
  ParamVector q0 = q;
  adam_step(fresh, q, Eigen::VectorXd::Zero(2));
  CHECK(q == q0);
}

TEST_CASE("adam trajectory matches an independent scalar implementation") {
  AdamState st;
  st.eta = 0.05;
  ParamVector p(2);
  p << 1.0, 1.0;
  ScalarAdam s0, s1;
  double t0 = 1.0, t1 = 1.0;
  for (int step = 0; step < 50; ++step) {
    Eigen::VectorXd g = p;  // gradient of 0.5 ||theta||^2
    adam_step(st, p, g);
    t0 = s0.step(t0, t0, 0.05);
    t1 = s1.step(t1, t1, 0.05);
    CHECK(std::abs(p(0) - t0) <= 1e-14);
    CHECK(std::abs(p(1) - t1) <= 1e-14);
  }
}

TEST_CASE("feature matrix layout, time features and normalization") {
  LearnedOptimizerState st;
  st.opt_params = optimizer_mlp_init(1);
  const int n = 40;
  Rng rng(5);
  ParamVector params(n);
  Eigen::VectorXd grads(n);
  for (int i = 0; i < n; ++i) {
    params(i) = rng.uniform(-1, 1);
    grads(i) = rng.uniform(-1, 1);
  }
  for (auto& v : st.v_acc) {
    v.resize(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(0, 2);
  }
  st.adam_m = Eigen::VectorXd::Zero(n);
  st.adam_v = Eigen::VectorXd::Zero(n);

  st.t = 0;
  Eigen::MatrixXd f0 = build_features(st, params, grads);
  CHECK(f0.rows() == n);
  CHECK(f0.cols() == 21);
  for (int j = 10; j < 21; ++j) CHECK(f0.col(j).cwiseAbs().maxCoeff() == 0.0);  // tanh(0) = 0

  st.t = 1000;
  Eigen::MatrixXd f = build_features(st, params, grads);
  CHECK(f(0, 16) == doctest::Approx(std::tanh(1.0)).epsilon(1e-15));  // x = 1000 column
  for (int j = 10; j < 21; ++j) {
    // Time features are constant across rows.
    CHECK((f.col(j).array() - f(0, j)).abs().maxCoeff() == 0.0);
  }
  for (int j = 0; j < 10; ++j) {
    double ms = f.col(j).squaredNorm() / n;
    CHECK(std::abs(ms - 1.0) <= 1e-9);
  }

  // Normalizing an already-normalized column is the identity.
  for (int j = 0; j < 10; ++j) {
    double ms = f.col(j).squaredNorm() / n;
    Eigen::VectorXd again = f.col(j) / std::sqrt(ms);
    CHECK((again - f.col(j)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  // Identically zero columns stay zero.
  Eigen::VectorXd zg = Eigen::VectorXd::Zero(n);
  st.t = 0;
  for (auto& v : st.v_acc) v.setZero();
  Eigen::MatrixXd fz = build_features(st, params, zg);
  CHECK(fz.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(fz.col(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zeroed heads reproduce adam exactly") {
  const double eta = 2e-3;
  LearnedOptimizer learned(zero_head_checkpoint({eta, 1e-3, 1e-3, 1e-3}));
  AdamOptimizer adam(eta);

  ParamVector pl(6), pa(6);
  for (int i = 0; i < 6; ++i) pl(i) = pa(i) = 0.3 * (i - 2.5);

  for (int step = 0; step < 100; ++step) {
    // Gradient of a quartic-ish test loss evaluated at the current params.
    Eigen::VectorXd gl = pl.array().cube().matrix() + pl;
    Eigen::VectorXd ga = pa.array().cube().matrix() + pa;
    CHECK(learned.step(pl, gl) == Optimizer::Status::ok);
    CHECK(adam.step(pa, ga) == Optimizer::Status::ok);
    CHECK((pl - pa).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("constant s_adam head doubles the nominal step") {
  const std::array<double, 4> lambda{1e-3, 1e-3, 1e-3, 1e-3};
  // Zero weights with the s_adam output bias at ln(2)/lambda2: the heads are
  // then constant, exp(lambda2 s_adam) = 2 and d_bb = 0.
  MlpSpec spec = optimizer_mlp_spec();
  ParamVector theta = ParamVector::Zero(spec.param_count());
  theta(spec.layer_offset(2) + 32 * 3) = std::log(2.0) / lambda[1];  // first output bias

  OptimizerCheckpoint ckpt;
  ckpt.theta = theta;
  ckpt.lambda = lambda;

  // Update equals 2 lambda1 w_adam, i.e. one Adam step at twice the rate.
  LearnedOptimizer once(ckpt);
  ParamVector p(3);
  p << 1.0, -2.0, 0.5;
  Eigen::VectorXd g(3);
  g << 0.2, 0.1, -0.4;
  ParamVector before = p;
  once.step(p, g);
  ScalarAdam oracle;
  for (int i = 0; i < 3; ++i) {
    ScalarAdam s;
    double after = s.step(before(i), g(i), 2.0 * lambda[0]);
    CHECK(p(i) == doctest::Approx(after).epsilon(1e-14));
  }
}

TEST_CASE("learned update matches a per-parameter hand evaluation") {
  Rng rng(31);
  const int n = 12;
  OptimizerCheckpoint ckpt;
  ckpt.theta = optimizer_mlp_init(3);
  ckpt.lambda = {5e-4, 1e-3, 1e-3, 1e-3};
  LearnedOptimizer opt(ckpt);

  ParamVector p(n);
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) {
    p(i) = rng.uniform(-1, 1);
    g(i) = rng.uniform(-0.5, 0.5);
  }

  // Warm the state for a couple of steps, then verify one step in detail.
  ParamVector pw = p;
  opt.step(pw, g);
  opt.step(pw, 0.5 * g);

  LearnedOptimizerState st = opt.state();  // copy of the warmed state
  ParamVector before = pw;
  Eigen::VectorXd g3 = -0.8 * g;
  opt.step(pw, g3);

  // Oracle: replicate the update rule with independent loops.
  const long t = st.t + 1;
  Eigen::VectorXd m = 0.9 * st.adam_m + 0.1 * g3;
  Eigen::VectorXd v = 0.999 * st.adam_v + 0.001 * g3.cwiseProduct(g3);
  std::array<Eigen::VectorXd, 4> acc = st.v_acc;
  for (int j = 0; j < 4; ++j)
    acc[static_cast<std::size_t>(j)] = kAccumulatorDecays[static_cast<std::size_t>(j)] * acc[static_cast<std::size_t>(j)] +
                                       (1 - kAccumulatorDecays[static_cast<std::size_t>(j)]) * g3.cwiseProduct(g3);

  Eigen::MatrixXd feats(n, 21);
  feats.col(0) = before;
  feats.col(1) = g3;
  for (int j = 0; j < 4; ++j) {
    feats.col(2 + j) = acc[static_cast<std::size_t>(j)];
    for (int i = 0; i < n; ++i)
      feats(i, 6 + j) = 1.0 / (std::sqrt(acc[static_cast<std::size_t>(j)](i)) + st.epsilon);
  }
  for (int j = 0; j < 10; ++j) {
    double ms = 0;
    for (int i = 0; i < n; ++i) ms += feats(i, j) * feats(i, j);
    ms /= n;
    if (ms > 0) feats.col(j) /= std::sqrt(ms);
  }
  for (int j = 0; j < 11; ++j)
    feats.col(10 + j).setConstant(
        std::tanh(static_cast<double>(t) / kTimeFeatureScales[static_cast<std::size_t>(j)]));

  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd heads = oracles::naive_forward(optimizer_mlp_spec(), ckpt.theta,
                                                   feats.row(i).transpose());
    double mhat = m(i) / (1 - std::pow(0.9, static_cast<double>(t)));
    double vhat = v(i) / (1 - std::pow(0.999, static_cast<double>(t)));
    double w_adam = mhat / (std::sqrt(vhat) + st.epsilon);
    double f = ckpt.lambda[0] * std::exp(ckpt.lambda[1] * heads(0)) * w_adam +
               ckpt.lambda[2] / (std::sqrt(acc[3](i)) + st.epsilon) * heads(2) *
                   std::exp(ckpt.lambda[3] * heads(1));
    CHECK(pw(i) == doctest::Approx(before(i) - f).epsilon(1e-12));
  }
}

TEST_CASE("accumulators follow the constant-gradient closed form") {
  OptimizerCheckpoint ckpt = zero_head_checkpoint({1e-3, 1e-3, 1e-3, 1e-3});
  LearnedOptimizer opt(ckpt);
  ParamVector p = ParamVector::Constant(3, 1.0);
  Eigen::VectorXd g(3);
  g << 0.5, -1.0, 2.0;
  const int steps = 25;
  ParamVector q = p;
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd fixed = g;
    opt.step(q, fixed);
  }
  for (int j = 0; j < 4; ++j) {
    double beta = kAccumulatorDecays[static_cast<std::size_t>(j)];
    for (int i = 0; i < 3; ++i) {
      double want = g(i) * g(i) * (1.0 - std::pow(beta, steps));
      CHECK(opt.state().v_acc[static_cast<std::size_t>(j)](i) ==
            doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("nominal-term descent and update continuity") {
  // Heads zeroed: the update is a positive multiple of w_adam.
  LearnedOptimizer opt(zero_head_checkpoint({1e-3, 1e-3, 1e-3, 1e-3}));
  ParamVector p(5);
  p << 1, 2, -1, 0.5, -0.25;
  Eigen::VectorXd g(5);
  g << 0.1, -0.2, 0.3, -0.4, 0.5;
  ParamVector before = p;
  opt.step(p, g);
  Eigen::VectorXd update = before - p;
  // w_adam at t=1 is g/(|g|+eps): the inner product must be positive.
  Eigen::VectorXd w = g.array() / (g.array().abs() + 1e-8);
  CHECK(update.dot(w) > 0.0);

  // Continuity in the optimizer weights.
  Rng rng(77);
  OptimizerCheckpoint base;
  base.theta = optimizer_mlp_init(11);
  base.lambda = {1e-3, 1e-3, 1e-3, 1e-3};
  const double delta = 1e-6;
  Eigen::VectorXd dir(base.theta.size());
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = rng.normal();
  dir.normalize();

  OptimizerCheckpoint pert = base;
  pert.theta += delta * dir;

  auto run_once = [&](const OptimizerCheckpoint& c) {
    LearnedOptimizer o(c);
    ParamVector q(5);
    q << 1, 2, -1, 0.5, -0.25;
    Eigen::VectorXd grad(5);
    grad << 0.1, -0.2, 0.3, -0.4, 0.5;
    ParamVector q0 = q;
    o.step(q, grad);
    return Eigen::VectorXd(q0 - q);
  };
  Eigen::VectorXd f0 = run_once(base);
  Eigen::VectorXd f1 = run_once(pert);
  CHECK((f1 - f0).norm() <= 100.0 * delta * f0.norm());
}

TEST_CASE("optimizer mlp spec and head initialization") {
  MlpSpec spec = optimizer_mlp_spec();
  CHECK(spec.layer_widths == std::vector<int>{21, 32, 32, 3});
  CHECK(spec.activation == Activation::swish);
  CHECK(spec.param_count() == 1859);

  ParamVector a = optimizer_mlp_init(5);
  ParamVector b = optimizer_mlp_init(5);
  CHECK(a == b);

  // Head entries come from Normal(0, 1e-3); across many seeds the empirical
  // variance of the 99 head entries lands near 1e-3.
  double sum_sq = 0.0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ParamVector t = optimizer_mlp_init(seed);
    int off = spec.layer_offset(2);
    sum_sq += t.segment(off, t.size() - off).squaredNorm();
    count += static_cast<int>(t.size()) - off;
  }
  CHECK(sum_sq / count > 0.7e-3);
  CHECK(sum_sq / count < 1.3e-3);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  OptimizerCheckpoint ckpt;
  ckpt.theta = optimizer_mlp_init(123);
  ckpt.lambda = {5e-4, 1e-3, 2e-3, 1e-3};
  ckpt.epsilon = 1e-8;
  ckpt.provenance = {{"n_tasks", 20}, {"note", "round-trip test"}};

  std::string path = temp_path("pinnopt_ckpt_test.json");
  save_checkpoint(ckpt, path);
  OptimizerCheckpoint back = load_checkpoint(path);
  std::filesystem::remove(path);

  CHECK(back.theta.size() == ckpt.theta.size());
  CHECK(back.theta == ckpt.theta);  // bitwise
  CHECK(back.lambda == ckpt.lambda);
  CHECK(back.epsilon == ckpt.epsilon);
  CHECK(back.feature_schema == ckpt.feature_schema);
  CHECK(back.provenance.at("n_tasks").get<int>() == 20);
}
