#include "pinnopt/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pinnopt/rng.hpp"

namespace pinnopt {

namespace {

constexpr double kPi = std::numbers::pi;

void Domain_validate(const Domain& d) { d.validate(); }

// Sets both residual callbacks from one templated functor.
template <class F>
void attach_residual(PdeProblem& p, F f) {
  p.residual = [f](const Point& pt, const SolutionJet<double>& u) { return f(pt, u); };
  p.residual_grad = [f](const Point& pt, const SolutionJet<double>& u, double& value,
                        SolutionJet<double>& grad) {
    value = f(pt, u);
    const int nc = SolutionJet<double>::coeff_count(u.order);
    SolutionJet<Dual> ud;
    ud.order = u.order;
    for (int k = 0; k < nc; ++k) ud.d[static_cast<std::size_t>(k)] = Dual(u.d[static_cast<std::size_t>(k)]);
    grad.order = u.order;
    for (int k = 0; k < nc; ++k) {
      ud.d[static_cast<std::size_t>(k)].d = 1.0;
      grad.d[static_cast<std::size_t>(k)] = f(pt, ud).d;
      ud.d[static_cast<std::size_t>(k)].d = 0.0;
    }
  };
}

struct AdvectionResidual {
  double c;
  template <class T>
  T operator()(const Point&, const SolutionJet<T>& u) const {
    return u(1, 0) + c * u(0, 1);
  }
};

struct PoissonResidual {
  template <class T>
  T operator()(const Point& pt, const SolutionJet<T>& u) const {
    return u(2, 0) + u(0, 2) - poisson_forcing(pt(0), pt(1));
  }
  static double poisson_forcing(double x, double y);
};

struct KdvResidual {
  double nu;
  template <class T>
  T operator()(const Point&, const SolutionJet<T>& u) const {
    return u(1, 0) + u(0, 0) * u(0, 1) - nu * u(0, 3);
  }
};

struct BurgersResidual {
  double nu;
  template <class T>
  T operator()(const Point&, const SolutionJet<T>& u) const {
    return u(1, 0) + u(0, 0) * u(0, 1) - nu * u(0, 2);
  }
};

double poisson_exact_value(double x, double y) {
  return (0.1 * std::sin(2.0 * kPi * x) + std::tanh(10.0 * x)) * std::sin(2.0 * kPi * y);
}

// Laplacian of the exact solution, differentiated by hand:
//   u = A(x) sin(2 pi y),  A = 0.1 sin(2 pi x) + tanh(10 x)
//   u_xx + u_yy = (A'' - 4 pi^2 A) sin(2 pi y)
//   A'' = -0.4 pi^2 sin(2 pi x) - 200 tanh(10x) (1 - tanh(10x)^2)
double PoissonResidual::poisson_forcing(double x, double y) {
  double th = std::tanh(10.0 * x);
  double s2x = std::sin(2.0 * kPi * x);
  double axx = -0.4 * kPi * kPi * s2x - 200.0 * th * (1.0 - th * th);
  double a = 0.1 * s2x + th;
  return (axx - 4.0 * kPi * kPi * a) * std::sin(2.0 * kPi * y);
}

double wrap_periodic(double v, double lo, double hi) {
  double len = hi - lo;
  double w = (v - lo) / len;
  return lo + len * (w - std::floor(w));
}

}  // namespace

void Domain::validate() const {
  if (t_range && (*t_range)[1] <= (*t_range)[0])
    throw std::invalid_argument("Domain: final time must exceed start");
  if (x_ranges.empty() || x_ranges.size() != periodic.size())
    throw std::invalid_argument("Domain: inconsistent spatial ranges");
  for (const auto& r : x_ranges)
    if (r[1] <= r[0]) throw std::invalid_argument("Domain: empty spatial range");
}

PdeProblem advection_problem(double c) {
  PdeProblem p;
  p.name = "advection";
  p.domain.t_range = {{0.0, 3.0}};
  p.domain.x_ranges = {{{-1.0, 1.0}}};
  p.domain.periodic = {true};
  p.bc.kind = BoundaryKind::periodic_hard;
  p.gamma_i = 1.0;
  p.gamma_b = 0.0;
  p.max_derivative_order = 1;
  p.reference = ReferenceKind::analytic;
  p.advection_c = c;
  p.ic = [](double x) { return std::cos(kPi * x); };
  p.exact = [c, ic = p.ic](const Point& pt) {
    return ic(wrap_periodic(pt(1) - c * pt(0), -1.0, 1.0));
  };
  attach_residual(p, AdvectionResidual{c});
  Domain_validate(p.domain);
  return p;
}

PdeProblem poisson_problem() {
  PdeProblem p;
  p.name = "poisson";
  p.domain.x_ranges = {{{-1.0, 1.0}}, {{-1.0, 1.0}}};
  p.domain.periodic = {false, false};
  p.bc.kind = BoundaryKind::dirichlet;
  p.bc.dirichlet_value = [](const Point& pt) { return poisson_exact_value(pt(0), pt(1)); };
  p.gamma_i = 0.0;
  p.gamma_b = 1000.0;
  p.max_derivative_order = 2;
  p.reference = ReferenceKind::analytic;
  p.exact = [](const Point& pt) { return poisson_exact_value(pt(0), pt(1)); };
  p.forcing = [](double x, double y) { return PoissonResidual::poisson_forcing(x, y); };
  attach_residual(p, PoissonResidual{});
  Domain_validate(p.domain);
  return p;
}

PdeProblem kdv_problem(double nu) {
  if (nu < 0.0) throw std::invalid_argument("kdv_problem: nu must be >= 0");
  PdeProblem p;
  p.name = "kdv";
  p.domain.t_range = {{0.0, 1.0}};
  p.domain.x_ranges = {{{-1.0, 1.0}}};
  p.domain.periodic = {true};
  p.bc.kind = BoundaryKind::periodic_hard;
  p.gamma_i = 1.0;
  p.gamma_b = 0.0;
  p.max_derivative_order = 3;
  p.reference = ReferenceKind::spectral;
  p.nu = nu;
  p.ic = [](double x) { return -std::sin(kPi * x); };
  attach_residual(p, KdvResidual{nu});
  Domain_validate(p.domain);
  return p;
}

PdeProblem burgers_problem(double nu) {
  if (nu <= 0.0) throw std::invalid_argument("burgers_problem: nu must be > 0");
  PdeProblem p;
  p.name = "burgers";
  p.domain.t_range = {{0.0, 1.0}};
  p.domain.x_ranges = {{{-1.0, 1.0}}};
  p.domain.periodic = {true};
  p.bc.kind = BoundaryKind::periodic_hard;
  p.gamma_i = 1.0;
  p.gamma_b = 0.0;
  p.max_derivative_order = 2;
  p.reference = ReferenceKind::spectral;
  p.nu = nu;
  p.ic = [](double x) { return -std::sin(kPi * x); };
  attach_residual(p, BurgersResidual{nu});
  Domain_validate(p.domain);
  return p;
}

PdeProblem problem_by_name(const std::string& name) {
  if (name == "advection") return advection_problem(1.0);
  if (name == "poisson") return poisson_problem();
  if (name == "kdv") return kdv_problem(0.0025);
  if (name == "burgers") return burgers_problem(0.01 / kPi);
  throw std::invalid_argument("unknown problem: " + name);
}

std::function<double(double)> kdv_initial_family(int k, double phi, bool k_times_pi) {
  if (k < 1 || k > 3)
    throw std::invalid_argument("kdv_initial_family: k must be in {1,2,3}");
  if (phi < -kPi / 2 || phi > kPi / 2)
    throw std::invalid_argument("kdv_initial_family: phi must be in [-pi/2, pi/2]");
  double kk = k_times_pi ? k * kPi : static_cast<double>(k);
  return [kk, phi](double x) { return std::cos(kk * x + phi); };
}

CollocationSet sample_collocation(const PdeProblem& problem, const CollocationCounts& counts,
                                  std::uint64_t seed) {
  if (counts.pde <= 0) throw std::invalid_argument("sample_collocation: pde count must be positive");
  const Domain& dom = problem.domain;
  Rng rng = Rng::derive(seed, 0xC0110C);
  CollocationSet set;

  if (dom.time_dependent()) {
    const auto [t0, tf] = *dom.t_range;
    const auto [lo, hi] = dom.x_ranges[0];
    set.pde_points.resize(counts.pde, 2);
    for (int i = 0; i < counts.pde; ++i) {
      set.pde_points(i, 0) = rng.uniform(t0, tf);
      set.pde_points(i, 1) = rng.uniform(lo, hi);
    }
    set.ic_points.resize(counts.ic, 2);
    for (int i = 0; i < counts.ic; ++i) {
      set.ic_points(i, 0) = 0.0;
      set.ic_points(i, 1) = rng.uniform(lo, hi);
    }
    set.bc_points.resize(0, 2);  // hard-periodic: no boundary loss term
    return set;
  }

  const auto [xlo, xhi] = dom.x_ranges[0];
  const auto [ylo, yhi] = dom.x_ranges[1];
  set.pde_points.resize(counts.pde, 2);
  for (int i = 0; i < counts.pde; ++i) {
    set.pde_points(i, 0) = rng.uniform(xlo, xhi);
    set.pde_points(i, 1) = rng.uniform(ylo, yhi);
  }
  set.ic_points.resize(0, 2);
  // Equal split across the four edges, remainder round-robin.
  set.bc_points.resize(counts.bc, 2);
  for (int i = 0; i < counts.bc; ++i) {
    int edge = i % 4;
    switch (edge) {
      case 0:  // x = xlo
        set.bc_points(i, 0) = xlo;
        set.bc_points(i, 1) = rng.uniform(ylo, yhi);
        break;
      case 1:  // x = xhi
        set.bc_points(i, 0) = xhi;
        set.bc_points(i, 1) = rng.uniform(ylo, yhi);
        break;
      case 2:  // y = ylo
        set.bc_points(i, 0) = rng.uniform(xlo, xhi);
        set.bc_points(i, 1) = ylo;
        break;
      default:  // y = yhi
        set.bc_points(i, 0) = rng.uniform(xlo, xhi);
        set.bc_points(i, 1) = yhi;
        break;
    }
  }
  return set;
}

}  // namespace pinnopt
