#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "pinnopt/jet_mlp.hpp"
#include "pinnopt/mlp.hpp"
#include "pinnopt/optimizers.hpp"
#include "pinnopt/problems.hpp"

namespace pinnopt {

enum class Embedding { none, periodic_x };

// Network plus problem binding. Hard-periodic problems see the embedded
// coordinates (t, cos 2pi xi, sin 2pi xi); Poisson sees (x, y) directly.
struct PinnModel {
  MlpSpec spec;
  Embedding embedding = Embedding::none;
  PdeProblem problem;
};

// Tanh network with the input width implied by the problem's boundary
// handling: 3 embedded coordinates under hard periodicity, 2 otherwise.
PinnModel make_model(const PdeProblem& problem, int hidden_layers, int units);

// (t, cos 2pi xi, sin 2pi xi) with xi = (x - lo)/(hi - lo) wrapped into
// [0, 1), which makes the two interval endpoints map to bit-identical
// embeddings.
Eigen::Vector3d periodic_embed(double t, double x, const std::array<double, 2>& x_range);

// Network solution value at a point (through the embedding).
double evaluate_solution(const PinnModel& model, const ParamVector& params, const Point& pt);

// All derivatives of u at one point up to the given total order, obtained by
// one jet-valued forward pass chained through the embedding.
SolutionJet<double> solution_jet_at(const PinnModel& model, const ParamVector& params,
                                    const Point& pt, int order);

// PDE residual of the network solution at one interior point.
double pde_residual_at(const PinnModel& model, const ParamVector& params, const Point& pt);

struct LossWeights {
  double gamma_i = 1.0;
  double gamma_b = 0.0;
};

struct LossRecord {
  double total = 0.0;
  double pde = 0.0;
  double ic = 0.0;
  double bc = 0.0;
  int epoch = 0;
};

// Mean-squared residuals per term; total = pde + gamma_i ic + gamma_b bc.
// Terms without points contribute zero.
LossRecord composite_loss(const PinnModel& model, const ParamVector& params,
                          const CollocationSet& colloc, const LossWeights& weights);

// Loss record plus its exact parameter gradient via the batched jet engine.
std::pair<LossRecord, Eigen::VectorXd> composite_loss_grad(const PinnModel& model,
                                                           const ParamVector& params,
                                                           const CollocationSet& colloc,
                                                           const LossWeights& weights);

struct TrainConfig {
  int epochs = 0;
  int minibatches = 10;
  std::uint64_t seed = 0;
  bool resample_collocation = false;  // re-draw PDE points each epoch
  bool record_history = true;
  double divergence_threshold = 1e6;
};

enum class TrainStatus { ok, diverged };

struct LossHistory {
  std::vector<LossRecord> records;
  TrainStatus status = TrainStatus::ok;

  // CSV with header epoch,total,pde,ic,bc.
  void write_csv(std::ostream& out) const;
};

class LossEngine;  // internal batched evaluator

// Inner training loop: per epoch the PDE points are partitioned into
// `minibatches` disjoint chunks by a seeded permutation while IC/BC points
// ride along in full; one optimizer step per chunk. The history records the
// full-set loss at the start of each epoch (so record 0 is the untrained
// loss and the CSV has exactly `epochs` rows); the post-training loss is
// available from full_loss() on the final parameters.
class Trainer {
 public:
  Trainer(PinnModel model, ParamVector params0, std::unique_ptr<Optimizer> optimizer,
          CollocationSet colloc, TrainConfig config);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // Advances n epochs (stops early on divergence); returns the mean
  // minibatch training loss over the window.
  double run_epochs(int n);

  LossRecord full_loss();

  const PinnModel& model() const { return model_; }
  const ParamVector& params() const { return params_; }
  const LossHistory& history() const { return history_; }
  Optimizer& optimizer() { return *optimizer_; }
  int epoch() const { return epoch_; }
  bool diverged() const { return history_.status == TrainStatus::diverged; }

 private:
  PinnModel model_;
  ParamVector params_;
  std::unique_ptr<Optimizer> optimizer_;
  CollocationSet colloc_;
  TrainConfig config_;
  LossWeights weights_;
  LossHistory history_;
  int epoch_ = 0;
  std::unique_ptr<LossEngine> engine_;
};

struct TrainResult {
  LossHistory history;
  ParamVector params;
  TrainStatus status = TrainStatus::ok;
};

TrainResult train(const PinnModel& model, const ParamVector& params0,
                  std::unique_ptr<Optimizer> optimizer, const CollocationSet& colloc,
                  const TrainConfig& config);

}  // namespace pinnopt
