#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pinnopt {

// Flat parameter vector; the unit of every optimizer update. Layout is
// layer-major: for each layer, the weight matrix row-major by output unit,
// then the biases.
using ParamVector = Eigen::VectorXd;

enum class Activation { tanh, swish };

struct MlpSpec {
  std::vector<int> layer_widths;  // input, hidden..., output
  Activation activation = Activation::tanh;

  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
  int layer_count() const { return static_cast<int>(layer_widths.size()) - 1; }
  int hidden_layers() const { return layer_count() - 1; }

  void validate() const {
    if (layer_widths.size() < 3)
      throw std::invalid_argument("MlpSpec: need at least one hidden layer");
    for (int w : layer_widths)
      if (w < 1) throw std::invalid_argument("MlpSpec: widths must be >= 1");
  }

  int param_count() const {
    int n = 0;
    for (int l = 0; l < layer_count(); ++l)
      n += layer_widths[static_cast<std::size_t>(l)] * layer_widths[static_cast<std::size_t>(l) + 1] + layer_widths[static_cast<std::size_t>(l) + 1];
    return n;
  }

  // Offset of layer l's weights in the flat vector.
  int layer_offset(int l) const {
    int off = 0;
    for (int i = 0; i < l; ++i)
      off += layer_widths[static_cast<std::size_t>(i)] * layer_widths[static_cast<std::size_t>(i) + 1] + layer_widths[static_cast<std::size_t>(i) + 1];
    return off;
  }

  bool operator==(const MlpSpec&) const = default;
};

using WeightView = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using BiasView = Eigen::Map<const Eigen::VectorXd>;
using WeightViewMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using BiasViewMut = Eigen::Map<Eigen::VectorXd>;

inline WeightView layer_weights(const MlpSpec& spec, const ParamVector& p, int l) {
  int in = spec.layer_widths[static_cast<std::size_t>(l)], out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
  return WeightView(p.data() + spec.layer_offset(l), out, in);
}
inline BiasView layer_biases(const MlpSpec& spec, const ParamVector& p, int l) {
  int in = spec.layer_widths[static_cast<std::size_t>(l)], out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
  return BiasView(p.data() + spec.layer_offset(l) + in * out, out);
}
inline WeightViewMut layer_weights(const MlpSpec& spec, ParamVector& p, int l) {
  int in = spec.layer_widths[static_cast<std::size_t>(l)], out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
  return WeightViewMut(p.data() + spec.layer_offset(l), out, in);
}
inline BiasViewMut layer_biases(const MlpSpec& spec, ParamVector& p, int l) {
  int in = spec.layer_widths[static_cast<std::size_t>(l)], out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
  return BiasViewMut(p.data() + spec.layer_offset(l) + in * out, out);
}

double activation_value(Activation act, double x);

// Taylor derivatives f^(0..n) of the activation at x; n <= 4.
void activation_derivatives(Activation act, double x, int n, double* out);

// Glorot-uniform weights with zero biases for every layer; when
// head_variance is given the final layer (weights and biases) is drawn from
// Normal(0, head_variance) instead. Deterministic per seed.
ParamVector mlp_init(const MlpSpec& spec, std::uint64_t seed,
                     std::optional<double> head_variance = std::nullopt);

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const ParamVector& params,
                            const Eigen::VectorXd& input);

// Columns are independent inputs; returns one output column per input.
Eigen::MatrixXd mlp_forward_batch(const MlpSpec& spec, const ParamVector& params,
                                  const Eigen::MatrixXd& inputs);

}  // namespace pinnopt
