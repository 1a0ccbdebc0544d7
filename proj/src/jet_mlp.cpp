#include "pinnopt/jet_mlp.hpp"

#include <array>

namespace pinnopt {

namespace {

using CoeffArray = std::array<double, kMaxJetCoeff>;
using PtrArray = std::array<double*, kMaxJetCoeff>;
using ConstPtrArray = std::array<const double*, kMaxJetCoeff>;

void resize_batch(JetBatch& b, int nc, int rows, int cols) {
  b.resize(static_cast<std::size_t>(nc));
  for (auto& m : b)
    if (m.rows() != rows || m.cols() != cols) m.resize(rows, cols);
}

}  // namespace

JetBatch make_jet_batch(const TaylorLayout& lay, int rows, int npoints) {
  JetBatch b;
  b.resize(static_cast<std::size_t>(lay.ncoeff));
  for (auto& m : b) m = Eigen::MatrixXd::Zero(rows, npoints);
  return b;
}

JetMlp::JetMlp(MlpSpec spec, const TaylorLayout& lay)
    : spec_(std::move(spec)), lay_(&lay) {
  spec_.validate();
  acts_.resize(static_cast<std::size_t>(spec_.layer_count()) + 1);
  dlift_.resize(static_cast<std::size_t>(spec_.layer_count()) - 1);
}

void JetMlp::forward(const ParamVector& params, const JetBatch& input) {
  const int nc = lay_->ncoeff;
  const int order = lay_->order;
  const int npoints = static_cast<int>(input[0].cols());
  const int L = spec_.layer_count();
  if (static_cast<int>(input.size()) != nc || input[0].rows() != spec_.input_width())
    throw std::invalid_argument("JetMlp::forward: input batch shape mismatch");

  acts_[0] = input;
  static constexpr double inv_fact[4] = {1.0, 1.0, 0.5, 1.0 / 6.0};

  for (int l = 0; l < L; ++l) {
    const int m = spec_.layer_widths[static_cast<std::size_t>(l) + 1];
    auto W = layer_weights(spec_, params, l);
    auto b = layer_biases(spec_, params, l);
    const bool hidden = l + 1 < L;
    JetBatch& out = acts_[static_cast<std::size_t>(l) + 1];
    resize_batch(hidden ? z_ : out, nc, m, npoints);
    JetBatch& z = hidden ? z_ : out;
    for (int k = 0; k < nc; ++k) z[static_cast<std::size_t>(k)].noalias() = W * acts_[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
    z[0].colwise() += b;
    if (!hidden) continue;

    resize_batch(out, nc, m, npoints);
    resize_batch(dlift_[static_cast<std::size_t>(l)], nc, m, npoints);
    ConstPtrArray zp;
    PtrArray ap, dp;
    for (int k = 0; k < nc; ++k) {
      zp[static_cast<std::size_t>(k)] = z[static_cast<std::size_t>(k)].data();
      ap[static_cast<std::size_t>(k)] = out[static_cast<std::size_t>(k)].data();
      dp[static_cast<std::size_t>(k)] = dlift_[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)].data();
    }
    const auto& mul = lay_->mul;
    const long total = static_cast<long>(m) * npoints;
    CoeffArray h, h2, h3;
    double fd[5] = {0.0, 0.0, 0.0, 0.0, 0.0};  // entries above order+1 stay zero
    for (long idx = 0; idx < total; ++idx) {
      for (int k = 0; k < nc; ++k) h[static_cast<std::size_t>(k)] = zp[static_cast<std::size_t>(k)][idx];
      activation_derivatives(spec_.activation, h[0], order + 1, fd);
      h[0] = 0.0;
      if (order >= 2) {
        h2.fill(0.0);
        for (const auto& e : mul) h2[static_cast<std::size_t>(e.c)] += h[static_cast<std::size_t>(e.a)] * h[static_cast<std::size_t>(e.b)];
      }
      if (order >= 3) {
        h3.fill(0.0);
        for (const auto& e : mul) h3[static_cast<std::size_t>(e.c)] += h2[static_cast<std::size_t>(e.a)] * h[static_cast<std::size_t>(e.b)];
      }
      for (int k = 0; k < nc; ++k) {
        double a = fd[1] * h[static_cast<std::size_t>(k)];
        double d = fd[2] * h[static_cast<std::size_t>(k)];
        if (order >= 2) {
          a += fd[2] * inv_fact[2] * h2[static_cast<std::size_t>(k)];
          d += fd[3] * inv_fact[2] * h2[static_cast<std::size_t>(k)];
        }
        if (order >= 3) {
          a += fd[3] * inv_fact[3] * h3[static_cast<std::size_t>(k)];
          d += fd[4] * inv_fact[3] * h3[static_cast<std::size_t>(k)];
        }
        if (k == 0) {
          a += fd[0];
          d += fd[1];
        }
        ap[static_cast<std::size_t>(k)][idx] = a;
        dp[static_cast<std::size_t>(k)][idx] = d;
      }
    }
  }
}

void JetMlp::pullback(const ParamVector& params, const JetBatch& out_adj,
                      Eigen::VectorXd& grad) {
  const int nc = lay_->ncoeff;
  const int L = spec_.layer_count();
  if (grad.size() != spec_.param_count())
    throw std::invalid_argument("JetMlp::pullback: grad size mismatch");

  cur_ = out_adj;
  for (int l = L - 1; l >= 0; --l) {
    const int m = spec_.layer_widths[static_cast<std::size_t>(l) + 1];
    const int npoints = static_cast<int>(cur_[0].cols());
    if (l < L - 1) {
      // Through the activation: zbar = adjoint-mul(abar, lift(f')(z)).
      // Reuses the multiplication table transposed: for c[e.c] += a[e.a]*b[e.b],
      // the adjoint w.r.t. a is abar[e.a] += cbar[e.c]*b[e.b].
      const JetBatch& d = dlift_[static_cast<std::size_t>(l)];
      resize_batch(z_, nc, m, npoints);
      ConstPtrArray cp, dp;
      PtrArray zp;
      for (int k = 0; k < nc; ++k) {
        cp[static_cast<std::size_t>(k)] = cur_[static_cast<std::size_t>(k)].data();
        dp[static_cast<std::size_t>(k)] = d[static_cast<std::size_t>(k)].data();
        zp[static_cast<std::size_t>(k)] = z_[static_cast<std::size_t>(k)].data();
      }
      const auto& mul = lay_->mul;
      const long total = static_cast<long>(m) * npoints;
      CoeffArray cb, dv, zb;
      for (long idx = 0; idx < total; ++idx) {
        for (int k = 0; k < nc; ++k) {
          cb[static_cast<std::size_t>(k)] = cp[static_cast<std::size_t>(k)][idx];
          dv[static_cast<std::size_t>(k)] = dp[static_cast<std::size_t>(k)][idx];
        }
        zb.fill(0.0);
        for (const auto& e : mul) zb[static_cast<std::size_t>(e.a)] += cb[static_cast<std::size_t>(e.c)] * dv[static_cast<std::size_t>(e.b)];
        for (int k = 0; k < nc; ++k) zp[static_cast<std::size_t>(k)][idx] = zb[static_cast<std::size_t>(k)];
      }
    } else {
      z_ = cur_;
    }

    const int in = spec_.layer_widths[static_cast<std::size_t>(l)];
    const int off = spec_.layer_offset(l);
    WeightViewMut Wbar(grad.data() + off, m, in);
    BiasViewMut bbar(grad.data() + off + in * m, m);
    for (int k = 0; k < nc; ++k)
      Wbar.noalias() += z_[static_cast<std::size_t>(k)] * acts_[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)].transpose();
    bbar.noalias() += z_[0].rowwise().sum();

    if (l > 0) {
      auto W = layer_weights(spec_, params, l);
      resize_batch(prev_, nc, in, npoints);
      for (int k = 0; k < nc; ++k) prev_[static_cast<std::size_t>(k)].noalias() = W.transpose() * z_[static_cast<std::size_t>(k)];
      std::swap(cur_, prev_);
    }
  }
}

}  // namespace pinnopt
