// Command-line driver: meta-train optimizers, run paired Adam/learned
// comparisons, generate reference solutions and export figure data.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>

#include "pinnopt/harness.hpp"
#include "pinnopt/refsolve.hpp"

namespace {

using namespace pinnopt;

struct CommonFlags {
  std::string problem = "advection";
  int hidden_layers = -1;
  int units = -1;
  int pde_points = -1;
  int icbc_points = -1;
  int epochs = -1;
  int minibatches = -1;
  double eta = -1.0;
  std::vector<double> lambda;
  double gamma_i = -1.0;
  double gamma_b = -1.0;
  double advection_c = 1.0;
  double nu = 0.0;
  std::uint64_t seed = 0;
  int grid_points = -1;
  int reference_n = -1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--problem", f.problem, "advection|poisson|kdv|burgers")
      ->check(CLI::IsMember({"advection", "poisson", "kdv", "burgers"}));
  cmd->add_option("--seed", f.seed, "master seed")->required();
  cmd->add_option("--hidden-layers", f.hidden_layers, "hidden layer count");
  cmd->add_option("--units", f.units, "units per hidden layer");
  cmd->add_option("--pde-points", f.pde_points, "interior collocation points");
  cmd->add_option("--icbc-points", f.icbc_points, "initial/boundary points");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--minibatches", f.minibatches, "minibatches per epoch");
  cmd->add_option("--eta", f.eta, "Adam learning rate");
  cmd->add_option("--lambda", f.lambda, "learned-optimizer constants l1 l2 l3 l4")
      ->expected(4);
  cmd->add_option("--gamma-i", f.gamma_i, "initial-loss weight");
  cmd->add_option("--gamma-b", f.gamma_b, "boundary-loss weight");
  cmd->add_option("--advection-c", f.advection_c, "advection velocity");
  cmd->add_option("--nu", f.nu, "viscosity/dispersion coefficient");
  cmd->add_option("--grid-points", f.grid_points, "evaluation grid per axis");
  cmd->add_option("--reference-n", f.reference_n, "spectral reference resolution");
}

ExperimentConfig to_config(const CommonFlags& f) {
  ExperimentConfig cfg = ExperimentConfig::defaults(f.problem);
  if (f.hidden_layers > 0) cfg.hidden_layers = f.hidden_layers;
  if (f.units > 0) cfg.units = f.units;
  if (f.pde_points > 0) cfg.pde_points = f.pde_points;
  if (f.icbc_points > 0) cfg.icbc_points = f.icbc_points;
  if (f.epochs >= 0) cfg.epochs = f.epochs;
  if (f.minibatches > 0) cfg.minibatches = f.minibatches;
  if (f.eta > 0) cfg.eta = f.eta;
  if (f.lambda.size() == 4) std::copy(f.lambda.begin(), f.lambda.end(), cfg.lambda.begin());
  if (f.gamma_i >= 0) cfg.gamma_i = f.gamma_i;
  if (f.gamma_b >= 0) cfg.gamma_b = f.gamma_b;
  cfg.advection_c = f.advection_c;
  if (f.nu != 0.0) cfg.nu = f.nu;
  cfg.seed = f.seed;
  if (f.grid_points > 1) cfg.grid_points = f.grid_points;
  if (f.reference_n > 0) cfg.reference_n = f.reference_n;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed neural network training with a meta-learned optimizer"};
  app.require_subcommand(1);

  CommonFlags meta_flags, cmp_flags, ref_flags;
  std::string meta_out = "meta_out", meta_dist = "reinit";
  MetaConfig meta_cfg;

  CLI::App* meta = app.add_subcommand("meta-train", "meta-train an optimizer with PES");
  add_common(meta, meta_flags);
  meta->add_option("--out", meta_out, "output directory");
  meta->add_option("--dist", meta_dist, "task distribution: reinit|kdv-ic|advection-c")
      ->check(CLI::IsMember({"reinit", "kdv-ic", "advection-c"}));
  meta->add_option("--tasks", meta_cfg.n_tasks, "number of tasks");
  meta->add_option("--meta-epochs", meta_cfg.meta_epochs, "passes over the task set");
  meta->add_option("--particles", meta_cfg.n_particles, "PES particles (even)");
  meta->add_option("--unroll", meta_cfg.unroll_epochs, "epochs per unroll (K)");
  meta->add_option("--sigma", meta_cfg.sigma, "perturbation std");
  meta->add_option("--alpha", meta_cfg.alpha, "meta learning rate");

  std::string cmp_ckpt, cmp_out = "compare_out";
  CLI::App* cmp = app.add_subcommand("compare", "paired Adam vs learned-optimizer training");
  add_common(cmp, cmp_flags);
  cmp->add_option("--checkpoint", cmp_ckpt, "optimizer checkpoint path")->required();
  cmp->add_option("--out", cmp_out, "output directory");

  std::string ref_out = "reference.csv";
  CLI::App* ref = app.add_subcommand("reference", "write the reference solution grid");
  add_common(ref, ref_flags);
  ref->add_option("--out", ref_out, "output CSV path");

  std::string exp_in, exp_out = "figures_out";
  CLI::App* exp = app.add_subcommand("export", "re-emit figure data from a report");
  exp->add_option("--in", exp_in, "directory containing report.json")->required();
  exp->add_option("--out", exp_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (*meta) {
      ExperimentConfig cfg = to_config(meta_flags);
      meta_cfg.seed = cfg.seed;
      TaskKind kind = meta_dist == "reinit" ? TaskKind::reinit_only
                      : meta_dist == "kdv-ic" ? TaskKind::kdv_ic_family
                                              : TaskKind::advection_velocity_family;
      std::string path = run_meta(cfg, meta_cfg, kind, meta_out);
      std::printf("checkpoint written to %s\n", path.c_str());
    } else if (*cmp) {
      ExperimentConfig cfg = to_config(cmp_flags);
      OptimizerCheckpoint ckpt = load_checkpoint(cmp_ckpt);
      ComparisonReport report = run_comparison(cfg, ckpt);
      write_report(report, cmp_out);
      std::printf("adam:    final_loss=%.6g max|e|=%.6g\n", report.adam.summary.final_loss,
                  report.adam.summary.max_abs_err);
      std::printf("learned: final_loss=%.6g max|e|=%.6g\n", report.learned.summary.final_loss,
                  report.learned.summary.max_abs_err);
      if (report.adam.summary.diverged || report.learned.summary.diverged) {
        std::fprintf(stderr, "warning: a run diverged\n");
        return kExitDiverged;
      }
    } else if (*ref) {
      ExperimentConfig cfg = to_config(ref_flags);
      write_reference_csv(cfg, ref_out);
      std::printf("reference written to %s\n", ref_out.c_str());
    } else if (*exp) {
      ComparisonReport report = load_report(exp_in);
      export_figures_data(report, exp_out);
      std::printf("figure data written to %s\n", exp_out.c_str());
    }
  } catch (const IntegrationFailure& e) {
    std::fprintf(stderr, "integration failure at t=%.6g: %s\n", e.t_reached, e.what());
    return kExitIntegrationFailure;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
