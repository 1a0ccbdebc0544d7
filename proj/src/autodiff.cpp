#include "pinnopt/autodiff.hpp"

#include <memory>

#include "pinnopt/jet_mlp.hpp"

namespace pinnopt {

namespace ad {

std::vector<double> Tape::gradient(const Var& output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (output.idx < 0) return adj;
  adj[static_cast<std::size_t>(output.idx)] = 1.0;
  auto next_fused = fused_.rbegin();
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    double a = adj[static_cast<std::size_t>(i)];
    if (a != 0.0) {
      if (n.p0 >= 0) adj[static_cast<std::size_t>(n.p0)] += n.w0 * a;
      if (n.p1 >= 0) adj[static_cast<std::size_t>(n.p1)] += n.w1 * a;
    }
    while (next_fused != fused_.rend() && next_fused->out_begin == i) {
      next_fused->pull({adj.data() + next_fused->out_begin,
                        static_cast<std::size_t>(next_fused->count)},
                       adj);
      ++next_fused;
    }
  }
  return adj;
}

}  // namespace ad

namespace {

struct JetCall {
  const TaylorLayout* lay = nullptr;
  std::vector<int> seeded;  // input coordinates carrying seeds
  int coeff_index = 0;      // requested coefficient
  double scale = 1.0;       // multi-index factorial
};

JetCall plan_request(const MlpSpec& spec, const Eigen::VectorXd& input,
                     const DerivativeRequest& req) {
  spec.validate();
  if (spec.output_width() != 1)
    throw std::invalid_argument("input_derivative: scalar-output network required");
  if (static_cast<int>(req.multi_index.size()) != spec.input_width() ||
      input.size() != spec.input_width())
    throw std::invalid_argument("input_derivative: multi-index/input width mismatch");
  int order = req.total_order();
  if (order > 3)
    throw std::invalid_argument("input_derivative: derivative order above 3 unsupported");
  for (int k : req.multi_index)
    if (k < 0) throw std::invalid_argument("input_derivative: negative multi-index entry");

  JetCall call;
  for (int i = 0; i < spec.input_width(); ++i)
    if (req.multi_index[static_cast<std::size_t>(i)] > 0) call.seeded.push_back(i);
  int nvars = std::max<int>(1, static_cast<int>(call.seeded.size()));
  call.lay = &TaylorLayout::get(nvars, order);
  std::array<int, 3> e{0, 0, 0};
  for (std::size_t v = 0; v < call.seeded.size(); ++v)
    e[v] = req.multi_index[static_cast<std::size_t>(call.seeded[v])];
  call.coeff_index = call.lay->index(e);
  call.scale = call.lay->factorial_scale(call.coeff_index);
  return call;
}

JetBatch seeded_input(const JetCall& call, const Eigen::VectorXd& input) {
  JetBatch in = make_jet_batch(*call.lay, static_cast<int>(input.size()), 1);
  for (int i = 0; i < input.size(); ++i) in[0](i, 0) = input(i);
  if (call.lay->order >= 1) {
    for (std::size_t v = 0; v < call.seeded.size(); ++v) {
      std::array<int, 3> e{0, 0, 0};
      e[v] = 1;
      in[static_cast<std::size_t>(call.lay->index(e))](call.seeded[v], 0) = 1.0;
    }
  }
  return in;
}

}  // namespace

double input_derivative(const MlpSpec& spec, const ParamVector& params,
                        const Eigen::VectorXd& input, const DerivativeRequest& req) {
  JetCall call = plan_request(spec, input, req);
  JetMlp net(spec, *call.lay);
  net.forward(params, seeded_input(call, input));
  return net.output()[static_cast<std::size_t>(call.coeff_index)](0, 0) * call.scale;
}

ad::Var input_derivative_var(ad::Tape& tape, const MlpSpec& spec,
                             std::span<const ad::Var> params,
                             const Eigen::VectorXd& input,
                             const DerivativeRequest& req) {
  if (static_cast<int>(params.size()) != spec.param_count())
    throw std::invalid_argument("input_derivative_var: param count mismatch");
  JetCall call = plan_request(spec, input, req);

  ParamVector theta(params.size());
  std::vector<int> leaf_idx(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    theta(static_cast<Eigen::Index>(i)) = params[i].value();
    leaf_idx[i] = params[i].idx;
  }

  auto net = std::make_shared<JetMlp>(spec, *call.lay);
  net->forward(theta, seeded_input(call, input));
  double value = net->output()[static_cast<std::size_t>(call.coeff_index)](0, 0) * call.scale;

  ad::Var out = tape.leaf(value);
  tape.add_fused(out.idx, 1,
                 [net, call, theta, leaf_idx = std::move(leaf_idx)](
                     std::span<const double> out_adj, std::span<double> adjoints) {
                   if (out_adj[0] == 0.0) return;
                   JetBatch seed = make_jet_batch(*call.lay, 1, 1);
                   seed[static_cast<std::size_t>(call.coeff_index)](0, 0) = out_adj[0] * call.scale;
                   Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
                   net->pullback(theta, seed, grad);
                   for (std::size_t i = 0; i < leaf_idx.size(); ++i)
                     adjoints[static_cast<std::size_t>(leaf_idx[i])] += grad(static_cast<Eigen::Index>(i));
                 });
  return out;
}

ad::Var mlp_output_var(ad::Tape& tape, const MlpSpec& spec,
                       std::span<const ad::Var> params,
                       const Eigen::VectorXd& input) {
  DerivativeRequest req;
  req.multi_index.assign(static_cast<std::size_t>(spec.input_width()), 0);
  return input_derivative_var(tape, spec, params, input, req);
}

LossEval param_gradient(const LossClosure& loss, const ParamVector& params) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  vars.reserve(static_cast<std::size_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) vars.push_back(tape.leaf(params(i)));
  ad::Var out = loss(tape, vars);
  std::vector<double> adj = tape.gradient(out);
  LossEval r;
  r.value = out.value();
  r.gradient.resize(params.size());
  for (Eigen::Index i = 0; i < params.size(); ++i)
    r.gradient(i) = adj[static_cast<std::size_t>(vars[static_cast<std::size_t>(i)].idx)];
  return r;
}

}  // namespace pinnopt
