#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>

#include "json.hpp"
#include "pinnopt/meta.hpp"
#include "pinnopt/optimizers.hpp"
#include "pinnopt/pinn.hpp"
#include "pinnopt/problems.hpp"

namespace pinnopt {

// Full description of one training experiment. defaults() reproduces the
// benchmark configurations (network size, collocation counts, epochs,
// learning rates and loss weights per problem).
struct ExperimentConfig {
  std::string problem = "advection";
  int hidden_layers = 2;
  int units = 20;
  int pde_points = 10000;
  int icbc_points = 100;
  int epochs = 3000;
  int minibatches = 10;
  double eta = 1e-3;                                // Adam learning rate
  std::array<double, 4> lambda{1e-3, 1e-3, 1e-3, 1e-3};
  double gamma_i = 1.0;
  double gamma_b = 0.0;
  double advection_c = 1.0;
  double nu = 0.0;  // 0 selects the per-problem default
  std::uint64_t seed = 0;

  int grid_points = 101;     // evaluation grid per axis
  int reference_n = 512;     // spectral reference resolution
  double reference_rtol = 1e-9;

  static ExperimentConfig defaults(const std::string& problem);
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  bool operator==(const ExperimentConfig&) const = default;
};

PdeProblem make_problem(const ExperimentConfig& cfg);
PinnModel make_model_from_config(const ExperimentConfig& cfg);

struct RunSummary {
  std::string optimizer;
  double final_loss = 0.0;  // full-set loss of the final parameters
  double max_abs_err = 0.0;
  double l2_err = 0.0;      // RMS error over the evaluation grid
  int epochs_to_match_adam = -1;
  bool diverged = false;
};

struct RunOutput {
  LossHistory history;
  ParamVector final_params;
  Eigen::MatrixXd grid;  // columns t,x,u_nn,u_ref,e ((x,y,...) for Poisson)
  RunSummary summary;
};

struct ComparisonReport {
  ExperimentConfig cfg;
  ParamVector params0;
  RunOutput adam;
  RunOutput learned;
};

// Trains the same initialization once with Adam and once with the learned
// optimizer (identical collocation set), then evaluates both against the
// reference solution on a grid_points^2 grid. Divergence is recorded in the
// summaries; the report is produced either way.
ComparisonReport run_comparison(const ExperimentConfig& cfg, const OptimizerCheckpoint& ckpt);

// Writes loss_adam.csv, loss_learned.csv, grid_adam.csv, grid_learned.csv,
// grid.csv (learned run), summary.csv and report.json into dir.
void write_report(const ComparisonReport& report, const std::string& dir);

// Rebuilds a report from report.json (grids are recomputed).
ComparisonReport load_report(const std::string& dir);

// The CSV bundle behind the figures: loss curves and solution/error grids.
void export_figures_data(const ComparisonReport& report, const std::string& dir);

// Meta-trains an optimizer for cfg's problem at cfg's scale and writes
// opt.ckpt plus meta_log.csv into out_dir; returns the checkpoint path.
std::string run_meta(const ExperimentConfig& cfg, const MetaConfig& meta, TaskKind kind,
                     const std::string& out_dir);

// Reference solution sampled on the evaluation grid, written as t,x,u_ref.
void write_reference_csv(const ExperimentConfig& cfg, const std::string& path);

// Exit codes shared by the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitConfigError = 3;
inline constexpr int kExitIntegrationFailure = 4;

}  // namespace pinnopt
