#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pinnopt {

// A space-time location: (t, x) for evolution problems, (x, y) for Poisson.
using Point = Eigen::Vector2d;

// Forward-mode scalar used to differentiate residuals with respect to the
// entries of a solution jet. Residuals are small polynomial expressions, so
// one seeded evaluation per entry is exact and cheap.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, double deriv) : v(value), d(deriv) {}
  friend Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
  friend Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
  friend Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
  friend Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }
  friend Dual operator*(Dual a, double s) { return s * a; }
  friend Dual operator-(Dual a) { return {-a.v, -a.d}; }
};

// Derivative values of a scalar solution u at one point, up to total order 3
// in the two independent coordinates. Entries are derivative values (not
// Taylor coefficients), ordered graded-lex to match TaylorLayout(2, order):
//   (0,0) | (1,0) (0,1) | (2,0) (1,1) (0,2) | (3,0) (2,1) (1,2) (0,3)
// For evolution problems index (i,j) means d_t^i d_x^j u; for Poisson it
// means d_x^i d_y^j u.
template <class T>
struct SolutionJet {
  int order = 0;
  std::array<T, 10> d{};

  static int coeff_count(int order) { return order == 0 ? 1 : order == 1 ? 3 : order == 2 ? 6 : 10; }
  static int pair_index(int i, int j) {
    static constexpr int base[4] = {0, 1, 3, 6};
    return base[i + j] + j;
  }
  const T& operator()(int i, int j) const { return d[static_cast<std::size_t>(pair_index(i, j))]; }
  T& operator()(int i, int j) { return d[static_cast<std::size_t>(pair_index(i, j))]; }
};

struct Domain {
  std::optional<std::array<double, 2>> t_range;  // absent for Poisson
  std::vector<std::array<double, 2>> x_ranges;
  std::vector<bool> periodic;

  void validate() const;
  bool time_dependent() const { return t_range.has_value(); }
};

enum class BoundaryKind { periodic_hard, dirichlet };

struct BoundarySpec {
  BoundaryKind kind = BoundaryKind::periodic_hard;
  std::function<double(const Point&)> dirichlet_value;  // required for dirichlet
};

enum class ReferenceKind { analytic, spectral };

// One benchmark initial-boundary value problem. Residuals come in two
// forms: plain evaluation and value-plus-gradient with respect to the jet
// entries (the latter drives loss backpropagation).
struct PdeProblem {
  std::string name;
  Domain domain;
  BoundarySpec bc;
  double gamma_i = 1.0;
  double gamma_b = 0.0;
  int max_derivative_order = 1;
  ReferenceKind reference = ReferenceKind::analytic;

  std::function<double(const Point&, const SolutionJet<double>&)> residual;
  std::function<void(const Point&, const SolutionJet<double>&, double&, SolutionJet<double>&)>
      residual_grad;

  std::function<double(double)> ic;            // u(0, x); absent for Poisson
  std::function<double(const Point&)> exact;   // set when reference == analytic
  std::function<double(double, double)> forcing;  // Poisson right-hand side

  double advection_c = 0.0;  // equation parameters, used by the reference solver
  double nu = 0.0;
};

// u_t + c u_x = 0 on t in [0,3], x in [-1,1], hard-periodic, u0 = cos(pi x).
PdeProblem advection_problem(double c);

// u_xx + u_yy = f on [-1,1]^2 with Dirichlet data from the exact solution
// (0.1 sin 2pi x + tanh 10x) sin 2pi y and gamma_b = 1000.
PdeProblem poisson_problem();

// u_t + u u_x - nu u_xxx = 0 on t in [0,1], x in [-1,1], hard-periodic,
// default u0 = -sin(pi x).
PdeProblem kdv_problem(double nu);

// u_t + u u_x - nu u_xx = 0 on t in [0,1], x in [-1,1], hard-periodic,
// u0 = -sin(pi x).
PdeProblem burgers_problem(double nu);

PdeProblem problem_by_name(const std::string& name);

// x -> cos(k x + phi) with k in {1,2,3}, phi in [-pi/2, pi/2]. When
// k_times_pi is set the wavenumber becomes k*pi, which makes the family
// 2-periodic on [-1,1]; the plain integer-k reading is the default.
std::function<double(double)> kdv_initial_family(int k, double phi, bool k_times_pi = false);

struct CollocationCounts {
  int pde = 0;
  int ic = 0;
  int bc = 0;
};

struct CollocationSet {
  Eigen::MatrixX2d pde_points;
  Eigen::MatrixX2d ic_points;  // t = 0 rows for evolution problems
  Eigen::MatrixX2d bc_points;  // empty under hard-periodic boundaries
};

// Uniform i.i.d. sampling over each region; Poisson boundary points split
// equally across the four edges. Deterministic per seed.
CollocationSet sample_collocation(const PdeProblem& problem, const CollocationCounts& counts,
                                  std::uint64_t seed);

}  // namespace pinnopt
