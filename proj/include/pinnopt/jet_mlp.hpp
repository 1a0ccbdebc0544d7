#pragma once

#include <Eigen/Dense>

#include "pinnopt/mlp.hpp"
#include "pinnopt/taylor.hpp"

namespace pinnopt {

// A batch of jets arranged coefficient-major: one (rows x npoints) matrix
// per Taylor coefficient. Real-linear network layers then act on each
// coefficient matrix as an ordinary GEMM.
using JetBatch = std::vector<Eigen::MatrixXd>;

JetBatch make_jet_batch(const TaylorLayout& lay, int rows, int npoints);

// Evaluates an MLP on a batch of jet-valued inputs and pulls scalar losses
// back to parameter space. forward() caches per-layer activations together
// with the jet lift of the activation derivative, which is exactly what the
// reverse sweep needs: for c = f(z) in the truncated algebra,
// dc = lift(f')(z) * dz, so the adjoint update is the transposed truncated
// convolution with lift(f')(z).
class JetMlp {
 public:
  JetMlp(MlpSpec spec, const TaylorLayout& lay);

  void forward(const ParamVector& params, const JetBatch& input);

  // Output jets of the last forward(): (output_width x npoints) per coeff.
  const JetBatch& output() const { return acts_.back(); }

  // Accumulates d(loss)/d(params) into grad, given the jet adjoint of the
  // outputs (out_adj[k](i,p) = d loss / d coeff_k of output i at point p).
  // Must follow a forward() with the same params.
  void pullback(const ParamVector& params, const JetBatch& out_adj,
                Eigen::VectorXd& grad);

  const TaylorLayout& layout() const { return *lay_; }
  const MlpSpec& spec() const { return spec_; }

 private:
  MlpSpec spec_;
  const TaylorLayout* lay_;
  std::vector<JetBatch> acts_;   // a[0..L]; a[0] is the input
  std::vector<JetBatch> dlift_;  // lift(f')(z[l]) for hidden layers
  JetBatch z_, cur_, prev_;      // workspaces
};

}  // namespace pinnopt
