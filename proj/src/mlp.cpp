#include "pinnopt/mlp.hpp"

#include <cmath>

#include "pinnopt/rng.hpp"

namespace pinnopt {

double activation_value(Activation act, double x) {
  switch (act) {
    case Activation::tanh:
      return std::tanh(x);
    case Activation::swish: {
      double s = 1.0 / (1.0 + std::exp(-x));
      return x * s;
    }
  }
  return 0.0;
}

void activation_derivatives(Activation act, double x, int n, double* out) {
  if (act == Activation::tanh) {
    double f = std::tanh(x);
    double f1 = 1.0 - f * f;
    out[0] = f;
    if (n >= 1) out[1] = f1;
    if (n >= 2) out[2] = -2.0 * f * f1;
    if (n >= 3) out[3] = -2.0 * (f1 * f1 + f * out[2]);
    if (n >= 4) out[4] = -6.0 * f1 * out[2] - 2.0 * f * out[3];
    return;
  }
  // swish(x) = x * sigmoid(x); s^(k) = k * sig^(k-1) + x * sig^(k)
  double s = 1.0 / (1.0 + std::exp(-x));
  double s1 = s * (1.0 - s);
  double s2 = s1 * (1.0 - 2.0 * s);
  double s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
  double s4 = s3 * (1.0 - 2.0 * s) - 6.0 * s1 * s2;
  out[0] = x * s;
  if (n >= 1) out[1] = s + x * s1;
  if (n >= 2) out[2] = 2.0 * s1 + x * s2;
  if (n >= 3) out[3] = 3.0 * s2 + x * s3;
  if (n >= 4) out[4] = 4.0 * s3 + x * s4;
}

ParamVector mlp_init(const MlpSpec& spec, std::uint64_t seed,
                     std::optional<double> head_variance) {
  spec.validate();
  ParamVector p(spec.param_count());
  Rng rng = Rng::derive(seed, 0xA11CE);
  const int L = spec.layer_count();
  for (int l = 0; l < L; ++l) {
    int in = spec.layer_widths[static_cast<std::size_t>(l)], out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
    double* w = p.data() + spec.layer_offset(l);
    double* b = w + in * out;
    if (head_variance && l == L - 1) {
      double sd = std::sqrt(*head_variance);
      for (int i = 0; i < in * out; ++i) w[i] = rng.normal(0.0, sd);
      for (int i = 0; i < out; ++i) b[i] = rng.normal(0.0, sd);
    } else {
      double limit = std::sqrt(6.0 / (in + out));
      for (int i = 0; i < in * out; ++i) w[i] = rng.uniform(-limit, limit);
      for (int i = 0; i < out; ++i) b[i] = 0.0;
    }
  }
  return p;
}

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const ParamVector& params,
                            const Eigen::VectorXd& input) {
  if (input.size() != spec.input_width())
    throw std::invalid_argument("mlp_forward: input width mismatch");
  Eigen::MatrixXd out = mlp_forward_batch(spec, params, input);
  return out.col(0);
}

Eigen::MatrixXd mlp_forward_batch(const MlpSpec& spec, const ParamVector& params,
                                  const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != spec.input_width())
    throw std::invalid_argument("mlp_forward_batch: input width mismatch");
  if (params.size() != spec.param_count())
    throw std::invalid_argument("mlp_forward_batch: param count mismatch");
  Eigen::MatrixXd a = inputs;
  const int L = spec.layer_count();
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = layer_weights(spec, params, l) * a;
    z.colwise() += layer_biases(spec, params, l);
    if (l + 1 < L) {
      if (spec.activation == Activation::tanh)
        a = z.array().tanh();
      else
        a = z.array() * (1.0 / (1.0 + (-z.array()).exp()));
    } else {
      a = std::move(z);
    }
  }
  return a;
}

}  // namespace pinnopt
