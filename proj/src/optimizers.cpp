#include "pinnopt/optimizers.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace pinnopt {

namespace {

void ensure_sized(Eigen::VectorXd& v, Eigen::Index n) {
  if (v.size() != n) v = Eigen::VectorXd::Zero(n);
}

}  // namespace

void adam_step(AdamState& state, ParamVector& params, const Eigen::VectorXd& grad) {
  if (params.size() != grad.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ensure_sized(state.m, params.size());
  ensure_sized(state.v, params.size());
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  Eigen::ArrayXd mhat = state.m.array() / bc1;
  Eigen::ArrayXd vhat = state.v.array() / bc2;
  Eigen::ArrayXd w_adam = mhat / (vhat.sqrt() + state.epsilon);
  params.array() -= state.eta * w_adam;
}

AdamOptimizer::AdamOptimizer(double eta, double beta1, double beta2, double epsilon) {
  state_.eta = eta;
  state_.beta1 = beta1;
  state_.beta2 = beta2;
  state_.epsilon = epsilon;
}

Optimizer::Status AdamOptimizer::step(ParamVector& params, const Eigen::VectorXd& grad) {
  adam_step(state_, params, grad);
  return params.allFinite() ? Status::ok : Status::diverged;
}

std::unique_ptr<Optimizer> AdamOptimizer::clone() const {
  return std::make_unique<AdamOptimizer>(*this);
}

Eigen::MatrixXd build_features(const LearnedOptimizerState& state, const ParamVector& params,
                               const Eigen::VectorXd& grads) {
  const Eigen::Index n = params.size();
  Eigen::MatrixXd f(n, kFeatureCount);
  f.col(0) = params;
  f.col(1) = grads;
  for (int j = 0; j < 4; ++j) {
    f.col(2 + j) = state.v_acc[static_cast<std::size_t>(j)];
    f.col(6 + j) =
        (state.v_acc[static_cast<std::size_t>(j)].array().sqrt() + state.epsilon).inverse().matrix();
  }
  for (int j = 0; j < 10; ++j) {
    double ms = f.col(j).squaredNorm() / static_cast<double>(n);
    if (ms > 0.0) f.col(j) /= std::sqrt(ms);
  }
  const double t = static_cast<double>(state.t);
  for (int j = 0; j < 11; ++j)
    f.col(10 + j).setConstant(std::tanh(t / kTimeFeatureScales[static_cast<std::size_t>(j)]));
  return f;
}

Optimizer::Status learned_step(LearnedOptimizerState& state, ParamVector& params,
                               const Eigen::VectorXd& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("learned_step: shape mismatch");
  const Eigen::Index n = params.size();
  ensure_sized(state.adam_m, n);
  ensure_sized(state.adam_v, n);
  for (auto& v : state.v_acc) ensure_sized(v, n);

  state.t += 1;
  state.adam_m = 0.9 * state.adam_m + 0.1 * grads;
  state.adam_v = 0.999 * state.adam_v + 0.001 * grads.cwiseProduct(grads);
  for (std::size_t j = 0; j < 4; ++j) {
    const double b = kAccumulatorDecays[j];
    state.v_acc[j] = b * state.v_acc[j] + (1.0 - b) * grads.cwiseProduct(grads);
  }

  const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(state.t));
  Eigen::ArrayXd mhat = state.adam_m.array() / bc1;
  Eigen::ArrayXd vhat = state.adam_v.array() / bc2;
  Eigen::ArrayXd w_adam = mhat / (vhat.sqrt() + state.epsilon);

  Eigen::MatrixXd features = build_features(state, params, grads);
  Eigen::MatrixXd heads =
      mlp_forward_batch(optimizer_mlp_spec(), state.opt_params, features.transpose());
  if (!heads.allFinite()) return Optimizer::Status::diverged;
  Eigen::ArrayXd s_adam = heads.row(0).transpose().array();
  Eigen::ArrayXd s_bb = heads.row(1).transpose().array();
  Eigen::ArrayXd d_bb = heads.row(2).transpose().array();

  const auto& l = state.lambda;
  Eigen::ArrayXd precond = state.v_acc[3].array().sqrt() + state.epsilon;
  Eigen::ArrayXd update =
      l[0] * (l[1] * s_adam).exp() * w_adam + (l[2] / precond) * d_bb * (l[3] * s_bb).exp();
  if (!update.allFinite()) return Optimizer::Status::diverged;
  params.array() -= update;
  return Optimizer::Status::ok;
}

MlpSpec optimizer_mlp_spec() {
  MlpSpec spec;
  spec.layer_widths = {kFeatureCount, 32, 32, 3};
  spec.activation = Activation::swish;
  return spec;
}

ParamVector optimizer_mlp_init(std::uint64_t seed) {
  return mlp_init(optimizer_mlp_spec(), seed, 1e-3);
}

namespace {

nlohmann::json spec_to_json(const MlpSpec& spec) {
  return {{"layer_widths", spec.layer_widths},
          {"activation", spec.activation == Activation::tanh ? "tanh" : "swish"}};
}

MlpSpec spec_from_json(const nlohmann::json& j) {
  MlpSpec spec;
  spec.layer_widths = j.at("layer_widths").get<std::vector<int>>();
  std::string act = j.at("activation").get<std::string>();
  if (act == "tanh")
    spec.activation = Activation::tanh;
  else if (act == "swish")
    spec.activation = Activation::swish;
  else
    throw std::invalid_argument("checkpoint: unknown activation " + act);
  return spec;
}

}  // namespace

void save_checkpoint(const OptimizerCheckpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = ckpt.format_version;
  j["mlp_spec"] = spec_to_json(ckpt.spec);
  j["theta"] = std::vector<double>(ckpt.theta.data(), ckpt.theta.data() + ckpt.theta.size());
  j["lambda"] = ckpt.lambda;
  j["epsilon"] = ckpt.epsilon;
  j["feature_schema"] = ckpt.feature_schema;
  j["provenance"] = ckpt.provenance;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << j.dump(2) << "\n";
}

OptimizerCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  OptimizerCheckpoint ckpt;
  ckpt.format_version = j.at("format_version").get<int>();
  if (ckpt.format_version != 1)
    throw std::runtime_error("load_checkpoint: unsupported format version");
  ckpt.spec = spec_from_json(j.at("mlp_spec"));
  auto theta = j.at("theta").get<std::vector<double>>();
  ckpt.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  auto lam = j.at("lambda").get<std::vector<double>>();
  if (lam.size() != 4) throw std::runtime_error("load_checkpoint: expected 4 lambda values");
  std::copy(lam.begin(), lam.end(), ckpt.lambda.begin());
  ckpt.epsilon = j.at("epsilon").get<double>();
  ckpt.feature_schema = j.at("feature_schema").get<std::string>();
  if (ckpt.feature_schema != kFeatureSchema)
    throw std::runtime_error("load_checkpoint: feature schema mismatch: " + ckpt.feature_schema);
  if (j.contains("provenance")) ckpt.provenance = j.at("provenance");
  if (ckpt.theta.size() != ckpt.spec.param_count())
    throw std::runtime_error("load_checkpoint: theta size does not match spec");
  return ckpt;
}

LearnedOptimizer::LearnedOptimizer(OptimizerCheckpoint ckpt) {
  state_.opt_params = std::move(ckpt.theta);
  state_.lambda = ckpt.lambda;
  state_.epsilon = ckpt.epsilon;
  if (state_.opt_params.size() != optimizer_mlp_spec().param_count())
    throw std::invalid_argument("LearnedOptimizer: unexpected optimizer MLP size");
}

Optimizer::Status LearnedOptimizer::step(ParamVector& params, const Eigen::VectorXd& grad) {
  return learned_step(state_, params, grad);
}

std::unique_ptr<Optimizer> LearnedOptimizer::clone() const {
  return std::make_unique<LearnedOptimizer>(*this);
}

}  // namespace pinnopt
