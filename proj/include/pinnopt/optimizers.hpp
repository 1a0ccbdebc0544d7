#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <string>

#include "json.hpp"
#include "pinnopt/mlp.hpp"

namespace pinnopt {

// Per-parameter update rule applied once per minibatch gradient.
class Optimizer {
 public:
  enum class Status { ok, diverged };

  virtual ~Optimizer() = default;
  virtual Status step(ParamVector& params, const Eigen::VectorXd& grad) = 0;
  virtual std::unique_ptr<Optimizer> clone() const = 0;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double eta = 1e-3;
};

// One Adam update; t is incremented before the bias correction, so the
// first step uses t = 1.
void adam_step(AdamState& state, ParamVector& params, const Eigen::VectorXd& grad);

class AdamOptimizer final : public Optimizer {
 public:
  explicit AdamOptimizer(double eta, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);
  Status step(ParamVector& params, const Eigen::VectorXd& grad) override;
  std::unique_ptr<Optimizer> clone() const override;
  const AdamState& state() const { return state_; }

 private:
  AdamState state_;
};

// Decay rates of the four second-moment accumulators fed to the optimizer
// MLP as features.
inline constexpr std::array<double, 4> kAccumulatorDecays{0.5, 0.9, 0.99, 0.999};

// Horizontal scales of the tanh(t/x) time features.
inline constexpr std::array<double, 11> kTimeFeatureScales{
    1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0, 30000.0, 100000.0};

inline constexpr int kFeatureCount = 21;  // theta, grad, 4x v, 4x rsqrt(v), 11 time
inline constexpr const char* kFeatureSchema = "lopt-features-v1";

struct LearnedOptimizerState {
  ParamVector opt_params;  // optimizer MLP weights
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  std::array<Eigen::VectorXd, 4> v_acc;
  long t = 0;
  std::array<double, 4> lambda{1e-3, 1e-3, 1e-3, 1e-3};
  double epsilon = 1e-8;
};

// Feature matrix (rows = parameters, 21 columns): [theta, grad, v1..v4,
// rsqrt(v1)..rsqrt(v4), tanh(t/x) for the 11 scales]. Non-time columns are
// scaled to unit second moment; exactly-zero columns are left untouched.
// Expects the state's accumulators to be already updated for this step.
Eigen::MatrixXd build_features(const LearnedOptimizerState& state, const ParamVector& params,
                               const Eigen::VectorXd& grads);

// The meta-learned update: updates all accumulators, evaluates the optimizer
// MLP row-wise for the three output heads (s_adam, s_bb, d_bb) and applies
//   theta -= lambda1 exp(lambda2 s_adam) w_adam
//            + lambda3 / (sqrt(v4) + eps) * d_bb * exp(lambda4 s_bb)
// where w_adam is the bias-corrected Adam direction and v4 the slowest
// accumulator.
Optimizer::Status learned_step(LearnedOptimizerState& state, ParamVector& params,
                               const Eigen::VectorXd& grads);

// 21-32-32-3 swish network.
MlpSpec optimizer_mlp_spec();

// Glorot hidden layers; output head from Normal(0, 1e-3) so a fresh
// optimizer behaves like Adam with eta = lambda1.
ParamVector optimizer_mlp_init(std::uint64_t seed);

struct OptimizerCheckpoint {
  int format_version = 1;
  MlpSpec spec = optimizer_mlp_spec();
  ParamVector theta;
  std::array<double, 4> lambda{1e-3, 1e-3, 1e-3, 1e-3};
  double epsilon = 1e-8;
  std::string feature_schema = kFeatureSchema;
  nlohmann::json provenance;
};

void save_checkpoint(const OptimizerCheckpoint& ckpt, const std::string& path);
OptimizerCheckpoint load_checkpoint(const std::string& path);

class LearnedOptimizer final : public Optimizer {
 public:
  explicit LearnedOptimizer(OptimizerCheckpoint ckpt);
  Status step(ParamVector& params, const Eigen::VectorXd& grad) override;
  std::unique_ptr<Optimizer> clone() const override;

  // Swaps the optimizer MLP weights while keeping accumulators; used by the
  // meta-trainer to perturb a persistent particle.
  void set_meta_params(const ParamVector& theta) { state_.opt_params = theta; }

  const LearnedOptimizerState& state() const { return state_; }
  LearnedOptimizerState& state() { return state_; }

 private:
  LearnedOptimizerState state_;
};

}  // namespace pinnopt
