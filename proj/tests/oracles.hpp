#pragma once

// Independent oracles for the test suites. Everything here is coded against
// the documented contracts (flat layer-major parameter layout, activation
// formulas), not against the library internals it checks.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "pinnopt/mlp.hpp"

namespace oracles {

// Loop-based feed-forward evaluation, independent of the library path.
inline Eigen::VectorXd naive_forward(const pinnopt::MlpSpec& spec,
                                     const pinnopt::ParamVector& p,
                                     Eigen::VectorXd x) {
  int off = 0;
  const int L = static_cast<int>(spec.layer_widths.size()) - 1;
  for (int l = 0; l < L; ++l) {
    int in = spec.layer_widths[static_cast<std::size_t>(l)];
    int out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
    Eigen::VectorXd z(out);
    for (int i = 0; i < out; ++i) {
      double s = p(off + in * out + i);  // bias
      for (int j = 0; j < in; ++j) s += p(off + i * in + j) * x(j);
      z(i) = s;
    }
    off += in * out + out;
    if (l + 1 < L) {
      for (int i = 0; i < out; ++i) {
        if (spec.activation == pinnopt::Activation::tanh)
          z(i) = std::tanh(z(i));
        else
          z(i) = z(i) / (1.0 + std::exp(-z(i)));
      }
    }
    x = z;
  }
  return x;
}

// Central differences for a mixed partial given by a multi-index, applying
// the dedicated k-th order stencil per coordinate. O(h^2) accurate.
inline double fd_derivative(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, std::vector<int> alpha,
                            double h) {
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] > 0) {
      int k = alpha[i];
      alpha[i] = 0;
      auto g = [&](double step) {
        Eigen::VectorXd y = x;
        y(static_cast<Eigen::Index>(i)) += step;
        return fd_derivative(f, y, alpha, h);
      };
      switch (k) {
        case 1:
          return (g(h) - g(-h)) / (2.0 * h);
        case 2:
          return (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
        default:
          return (g(2.0 * h) - 2.0 * g(h) + 2.0 * g(-h) - g(-2.0 * h)) / (2.0 * h * h * h);
      }
    }
  }
  return f(x);
}

// Central-difference gradient in one coordinate of a params->scalar map.
inline double fd_param_derivative(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& p, Eigen::Index i, double h) {
  Eigen::VectorXd pp = p, pm = p;
  pp(i) += h;
  pm(i) -= h;
  return (f(pp) - f(pm)) / (2.0 * h);
}

// |a - b| measured against the larger magnitude with an absolute floor, the
// practical reading of "relative tolerance" for values that may pass
// through zero. Comparisons against finite-difference oracles use a unit
// floor, matching the O(1) scale of the quantities and the truncation noise
// of the stated step sizes.
inline bool close_rel(double a, double b, double rel, double floor = 1.0) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracles
