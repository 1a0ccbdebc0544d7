#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pinnopt/problems.hpp"
#include "pinnopt/refsolve.hpp"
#include "pinnopt/rng.hpp"

using namespace pinnopt;

namespace {

constexpr double kPi = std::numbers::pi;

Field make_field(int n, const std::function<double(double)>& f) {
  Field field;
  field.grid.n = n;
  field.grid.x_range = {-1.0, 1.0};
  field.values.resize(n);
  for (int j = 0; j < n; ++j) field.values(j) = f(field.grid.node(j));
  return field;
}

std::vector<double> linspace_vec(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

TEST_CASE("grid validation") {
  PeriodicGrid bad{100, {-1.0, 1.0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  PeriodicGrid small{8, {-1.0, 1.0}};
  CHECK_THROWS_AS(small.validate(), std::invalid_argument);
  PeriodicGrid ok{64, {-1.0, 1.0}};
  ok.validate();
  CHECK(ok.node(0) == -1.0);
  CHECK(ok.node(32) == doctest::Approx(0.0));
}

TEST_CASE("spectral derivatives of sin(pi x)") {
  Field u = make_field(64, [](double x) { return std::sin(kPi * x); });
  Field d1 = spectral_derivative(u, 1);
  Field d3 = spectral_derivative(u, 3);
  double e1 = 0, e3 = 0;
  for (int j = 0; j < 64; ++j) {
    double x = u.grid.node(j);
    e1 = std::max(e1, std::abs(d1.values(j) - kPi * std::cos(kPi * x)));
    e3 = std::max(e3, std::abs(d3.values(j) + kPi * kPi * kPi * std::cos(kPi * x)));
  }
  CHECK(e1 <= 1e-10);
  CHECK(e3 <= 1e-8);

  Field c = make_field(32, [](double) { return 2.5; });
  for (int order = 1; order <= 3; ++order)
    CHECK(spectral_derivative(c, order).values.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("spectral accuracy reaches round-off once resolved") {
  auto f = [](double x) { return std::exp(std::sin(kPi * x)); };
  auto fp = [](double x) { return kPi * std::cos(kPi * x) * std::exp(std::sin(kPi * x)); };
  double prev = 1e9;
  for (int n : {16, 32, 64, 128}) {
    Field u = make_field(n, f);
    Field d = spectral_derivative(u, 1);
    double err = 0;
    for (int j = 0; j < n; ++j) err = std::max(err, std::abs(d.values(j) - fp(u.grid.node(j))));
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
  CHECK(prev <= 1e-10);
}

TEST_CASE("advection integration matches the analytic solution") {
  PdeProblem p = advection_problem(1.0);
  Field u0 = initial_field(p, 128);
  IntegratorConfig cfg;
  cfg.rtol = cfg.atol = 1e-9;
  auto fields = integrate(p, u0, {0.0, 1.5, 3.0}, cfg);
  REQUIRE(fields.size() == 3);
  double err = 0;
  for (int j = 0; j < 128; ++j) {
    double x = fields[2].grid.node(j);
    err = std::max(err, std::abs(fields[2].values(j) - std::cos(kPi * (x - 3.0))));
  }
  CHECK(err <= 1e-6);
}

TEST_CASE("tightening the tolerance does not increase the advection error") {
  PdeProblem p = advection_problem(1.0);
  Field u0 = initial_field(p, 128);
  auto final_error = [&](double rtol) {
    IntegratorConfig cfg;
    cfg.rtol = cfg.atol = rtol;
    auto fields = integrate(p, u0, {3.0}, cfg);
    double err = 0;
    for (int j = 0; j < 128; ++j) {
      double x = fields[0].grid.node(j);
      err = std::max(err, std::abs(fields[0].values(j) - std::cos(kPi * (x - 3.0))));
    }
    return err;
  };
  double loose = final_error(1e-8);
  double tight = final_error(1e-9);
  CHECK(tight <= loose + 1e-12);
}

TEST_CASE("kdv conserves the spatial mean") {
  PdeProblem p = kdv_problem(0.0025);
  Field u0 = initial_field(p, 512);
  auto fields = integrate(p, u0, linspace_vec(0.0, 1.0, 11));
  double mean0 = fields[0].values.mean();
  for (const Field& f : fields) CHECK(std::abs(f.values.mean() - mean0) <= 1e-8);
}

TEST_CASE("burgers energy is non-increasing") {
  PdeProblem p = burgers_problem(0.01 / kPi);
  Field u0 = initial_field(p, 512);
  auto fields = integrate(p, u0, linspace_vec(0.0, 1.0, 11));
  double prev = fields[0].values.squaredNorm();
  for (std::size_t i = 1; i < fields.size(); ++i) {
    double e = fields[i].values.squaredNorm();
    CHECK(e <= prev * (1.0 + 1e-12));
    prev = e;
  }
}

TEST_CASE("kdv solution is grid-converged at the default resolution") {
  PdeProblem p = kdv_problem(0.0025);
  auto solve = [&](int n) {
    Field u0 = initial_field(p, n);
    return integrate(p, u0, {1.0})[0];
  };
  Field coarse = solve(512);
  Field fine = solve(1024);
  double err = 0;
  for (int j = 0; j < 512; ++j)
    err = std::max(err, std::abs(coarse.values(j) - fine.values(2 * j)));
  CHECK(err <= 1e-6);
}

TEST_CASE("evaluate_at: stored values, band-limited exactness, analytic check") {
  PdeProblem p = advection_problem(1.0);
  Field u0 = initial_field(p, 128);
  auto fields = integrate(p, u0, linspace_vec(0.0, 3.0, 31));

  // Grid node at a saved time reproduces the stored value.
  CHECK(evaluate_at(fields, fields[5].time, fields[5].grid.node(17)) ==
        doctest::Approx(fields[5].values(17)).epsilon(1e-12));

  // Band-limited field off-grid.
  Field bl = make_field(64, [](double x) { return std::sin(2.0 * kPi * x); });
  std::vector<Field> one{bl};
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    double x = rng.uniform(-1, 1);
    CHECK(std::abs(evaluate_at(one, 0.0, x) - std::sin(2.0 * kPi * x)) <= 1e-12);
  }

  // Interpolated reference against the analytic advection solution.
  for (int i = 0; i < 100; ++i) {
    double t = rng.uniform(0, 3), x = rng.uniform(-1, 1);
    double want = std::cos(kPi * (x - t));
    CHECK(std::abs(evaluate_at(fields, t, x) - want) <= 1e-6);
  }

  CHECK_THROWS_AS(evaluate_at(fields, 3.5, 0.0), std::out_of_range);
  CHECK_THROWS_AS(evaluate_at(fields, -0.5, 0.0), std::out_of_range);
}

TEST_CASE("integration failure reports the time reached") {
  PdeProblem p = kdv_problem(0.0025);
  Field u0 = initial_field(p, 512);
  IntegratorConfig cfg;
  cfg.max_steps = 10;
  try {
    integrate(p, u0, {1.0}, cfg);
    FAIL("expected IntegrationFailure");
  } catch (const IntegrationFailure& e) {
    CHECK(e.t_reached >= 0.0);
    CHECK(e.t_reached < 1.0);
  }
}
