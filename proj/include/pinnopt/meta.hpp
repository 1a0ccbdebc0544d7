#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinnopt/optimizers.hpp"
#include "pinnopt/pinn.hpp"
#include "pinnopt/problems.hpp"

namespace pinnopt {

struct MetaConfig {
  int n_particles = 2;   // must be even; antithetic pairs
  int unroll_epochs = 1;  // K
  double sigma = 0.01;    // perturbation std in optimizer-weight space
  double alpha = 1e-4;    // meta learning rate (plain gradient descent)
  int n_tasks = 20;
  int meta_epochs = 50;   // passes over the task set
  std::uint64_t seed = 0;
};

enum class TaskKind { reinit_only, kdv_ic_family, advection_velocity_family };

// Sampler for inner training tasks. reinit_only re-draws network weights on
// the fixed base problem; the families also resample (k, phi) or c.
struct TaskDistribution {
  TaskKind kind = TaskKind::reinit_only;
  std::string base_problem = "advection";
  MlpSpec net;
  bool kdv_k_times_pi = false;
};

struct Task {
  PdeProblem problem;
  ParamVector params0;
  nlohmann::json descriptor;  // sampled family parameters, for provenance
};

Task sample_task(const TaskDistribution& dist, int index, std::uint64_t seed);

// PES estimate (1 / (N sigma^2)) sum_i xi_cum_i * L_i over the particles.
// Returns nullopt when any loss is non-finite so the caller can skip the
// meta-step and re-perturb.
std::optional<Eigen::VectorXd> pes_gradient(std::span<const double> losses,
                                            std::span<const Eigen::VectorXd> xi_cums,
                                            double sigma);

struct MetaLogRow {
  int meta_epoch = 0;
  int task = 0;
  double mean_inner_loss = 0.0;
  double grad_norm = 0.0;
};

// Inner-training shape shared by every task of a distribution.
struct InnerSetup {
  CollocationCounts counts;
  TrainConfig train;  // epochs = inner horizon; record_history is forced off
  std::array<double, 4> lambda{1e-3, 1e-3, 1e-3, 1e-3};
  double epsilon = 1e-8;
};

struct MetaResult {
  OptimizerCheckpoint checkpoint;
  std::vector<MetaLogRow> log;
  std::vector<int> dropped_tasks;
};

// The optimizer weights meta_train starts from for a given master seed.
ParamVector meta_initial_theta(std::uint64_t seed);

// Persistent Evolution Strategies over the task set: each task keeps N
// persistent particles (inner PINN state plus optimizer accumulators); every
// meta-epoch each task's particles advance K epochs under antithetically
// perturbed optimizer weights, and theta takes one SGD step against the PES
// gradient of the unroll's mean training loss. Single-threaded and
// bit-reproducible from the seed.
MetaResult meta_train(const TaskDistribution& dist, const MetaConfig& cfg,
                      const InnerSetup& inner);

void write_meta_log(const std::vector<MetaLogRow>& log, std::ostream& out);

}  // namespace pinnopt
