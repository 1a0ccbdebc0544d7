#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "pinnopt/mlp.hpp"

namespace pinnopt {

// Mixed partial derivative request over network input coordinates.
// multi_index[i] is the derivative order in coordinate i; total order <= 3.
struct DerivativeRequest {
  std::vector<int> multi_index;
  int total_order() const {
    int s = 0;
    for (int k : multi_index) s += k;
    return s;
  }
};

namespace ad {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int idx = -1;
  double v = 0.0;
  double value() const { return v; }
};

// Scalar reverse-mode tape. Not a general graph autodiff: it exists to
// differentiate loss closures built from scalar arithmetic plus the fused
// network primitives below, whose pullbacks run a structured backward pass
// through the MLP instead of coefficient-level tape nodes.
class Tape {
 public:
  struct Node {
    int p0 = -1, p1 = -1;
    double w0 = 0.0, w1 = 0.0;
  };

  Var leaf(double v) { return push(v, -1, 0.0, -1, 0.0); }

  Var push(double v, int p0, double w0, int p1, double w1) {
    nodes_.push_back({p0, p1, w0, w1});
    vals_.push_back(v);
    return Var{this, static_cast<int>(nodes_.size()) - 1, v};
  }

  // Registers `count` freshly pushed output nodes [out_begin, out_begin+count)
  // whose adjoints are consumed by `pull`, which accumulates directly into
  // the adjoint array (typically at leaf indices).
  void add_fused(int out_begin, int count,
                 std::function<void(std::span<const double> out_adj,
                                    std::span<double> adjoints)> pull) {
    fused_.push_back({out_begin, count, std::move(pull)});
  }

  // Adjoints of every node w.r.t. the given output.
  std::vector<double> gradient(const Var& output) const;

  int size() const { return static_cast<int>(nodes_.size()); }
  double value(int i) const { return vals_[static_cast<std::size_t>(i)]; }

 private:
  struct Fused {
    int out_begin = 0, count = 0;
    std::function<void(std::span<const double>, std::span<double>)> pull;
  };
  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<Fused> fused_;
};

inline Var operator+(Var a, Var b) { return a.tape->push(a.v + b.v, a.idx, 1.0, b.idx, 1.0); }
inline Var operator-(Var a, Var b) { return a.tape->push(a.v - b.v, a.idx, 1.0, b.idx, -1.0); }
inline Var operator*(Var a, Var b) { return a.tape->push(a.v * b.v, a.idx, b.v, b.idx, a.v); }
inline Var operator/(Var a, Var b) { return a.tape->push(a.v / b.v, a.idx, 1.0 / b.v, b.idx, -a.v / (b.v * b.v)); }
inline Var operator+(Var a, double s) { return a.tape->push(a.v + s, a.idx, 1.0, -1, 0.0); }
inline Var operator+(double s, Var a) { return a + s; }
inline Var operator-(Var a, double s) { return a + (-s); }
inline Var operator-(double s, Var a) { return a.tape->push(s - a.v, a.idx, -1.0, -1, 0.0); }
inline Var operator*(Var a, double s) { return a.tape->push(a.v * s, a.idx, s, -1, 0.0); }
inline Var operator*(double s, Var a) { return a * s; }
inline Var operator/(Var a, double s) { return a * (1.0 / s); }
inline Var operator-(Var a) { return a * -1.0; }
inline Var sqr(Var a) { return a * a; }
inline Var tanh(Var a) {
  double t = std::tanh(a.v);
  return a.tape->push(t, a.idx, 1.0 - t * t, -1, 0.0);
}
inline Var exp(Var a) {
  double e = std::exp(a.v);
  return a.tape->push(e, a.idx, e, -1, 0.0);
}
inline Var log(Var a) { return a.tape->push(std::log(a.v), a.idx, 1.0 / a.v, -1, 0.0); }
inline Var sqrt(Var a) {
  double s = std::sqrt(a.v);
  return a.tape->push(s, a.idx, 0.5 / s, -1, 0.0);
}
inline Var sin(Var a) { return a.tape->push(std::sin(a.v), a.idx, std::cos(a.v), -1, 0.0); }
inline Var cos(Var a) { return a.tape->push(std::cos(a.v), a.idx, -std::sin(a.v), -1, 0.0); }

}  // namespace ad

// Exact mixed partial of a scalar-output network with respect to its inputs,
// computed by truncated-Taylor forward propagation (no finite differences).
double input_derivative(const MlpSpec& spec, const ParamVector& params,
                        const Eigen::VectorXd& input, const DerivativeRequest& req);

// Tape-recorded version: the result participates in loss closures and its
// pullback routes adjoints to the parameter leaves through the jet engine.
ad::Var input_derivative_var(ad::Tape& tape, const MlpSpec& spec,
                             std::span<const ad::Var> params,
                             const Eigen::VectorXd& input,
                             const DerivativeRequest& req);

// Network output value as a tape variable (zero-order convenience wrapper).
ad::Var mlp_output_var(ad::Tape& tape, const MlpSpec& spec,
                       std::span<const ad::Var> params,
                       const Eigen::VectorXd& input);

struct LossEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

using LossClosure = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

// Exact gradient of a scalar loss closure with respect to every parameter,
// including through nested input-derivative terms. A non-finite loss value
// is passed through in `value` for the caller to act on.
LossEval param_gradient(const LossClosure& loss, const ParamVector& params);

}  // namespace pinnopt
