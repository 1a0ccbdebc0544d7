#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinnopt/problems.hpp"

namespace pinnopt {

// Uniform periodic grid x_j = lo + j (hi - lo)/n, endpoint excluded.
struct PeriodicGrid {
  int n = 0;
  std::array<double, 2> x_range{-1.0, 1.0};

  void validate() const {
    if (n < 16 || (n & (n - 1)) != 0)
      throw std::invalid_argument("PeriodicGrid: n must be a power of two >= 16");
    if (x_range[1] <= x_range[0]) throw std::invalid_argument("PeriodicGrid: empty range");
  }
  double length() const { return x_range[1] - x_range[0]; }
  double node(int j) const { return x_range[0] + j * length() / n; }
  Eigen::VectorXd nodes() const {
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x(j) = node(j);
    return x;
  }
};

struct Field {
  PeriodicGrid grid;
  Eigen::VectorXd values;
  double time = 0.0;
};

struct IntegratorConfig {
  double rtol = 1e-9;
  double atol = 1e-9;
  double initial_dt = 1e-4;
  long max_steps = 4000000;
  bool dealias = false;  // 2/3-rule truncation of the quadratic term
};

struct IntegrationFailure : std::runtime_error {
  IntegrationFailure(const std::string& what, double t) : std::runtime_error(what), t_reached(t) {}
  double t_reached;
};

// Fourier differentiation: mode m is scaled by (i 2 pi m / L)^order; the
// Nyquist mode is zeroed for odd orders.
Field spectral_derivative(const Field& field, int order);

// Method-of-lines integration of advection / KdV / Burgers with spectral
// spatial derivatives and an embedded Dormand-Prince 5(4) pair with PI step
// control, stepping exactly onto each requested sample time.
std::vector<Field> integrate(const PdeProblem& problem, const Field& u0,
                             const std::vector<double>& t_samples,
                             const IntegratorConfig& cfg = {});

// Band-limited evaluation of a periodic field at an arbitrary x.
class TrigInterpolant {
 public:
  explicit TrigInterpolant(const Field& field);
  double operator()(double x) const;

 private:
  PeriodicGrid grid_;
  Eigen::VectorXcd spectrum_;
};

// Trigonometric interpolation in x and 4-point Lagrange (cubic) in t across
// the saved fields. Queries outside the sampled time range are rejected.
double evaluate_at(std::span<const Field> fields, double t, double x);

// Sampled initial condition of a problem on a fresh grid.
Field initial_field(const PdeProblem& problem, int n);

}  // namespace pinnopt
