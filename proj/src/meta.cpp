#include "pinnopt/meta.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "pinnopt/rng.hpp"

namespace pinnopt {

namespace {

constexpr int kMaxTaskRestarts = 5;  // consecutive failed unrolls before dropping a task

PinnModel model_for(const PdeProblem& problem, const MlpSpec& net) {
  PinnModel m;
  m.spec = net;
  m.embedding = problem.bc.kind == BoundaryKind::periodic_hard ? Embedding::periodic_x
                                                               : Embedding::none;
  m.problem = problem;
  const int want = m.embedding == Embedding::periodic_x ? 3 : 2;
  if (net.input_width() != want)
    throw std::invalid_argument("meta: network input width does not match the problem");
  return m;
}

struct Particle {
  std::unique_ptr<Trainer> trainer;
  Eigen::VectorXd xi_cum;
};

struct TaskState {
  Task task;
  std::vector<Particle> particles;
  int restarts = 0;
  int consecutive_failures = 0;
  bool dropped = false;
};

LearnedOptimizer fresh_optimizer(const ParamVector& theta, const InnerSetup& inner) {
  OptimizerCheckpoint ckpt;
  ckpt.theta = theta;
  ckpt.lambda = inner.lambda;
  ckpt.epsilon = inner.epsilon;
  return LearnedOptimizer(std::move(ckpt));
}

void start_particles(TaskState& ts, const TaskDistribution& dist, const MetaConfig& cfg,
                     const InnerSetup& inner, const ParamVector& theta) {
  const std::uint64_t restart_stream =
      0x7A5C0000ULL + 1000003ULL * static_cast<std::uint64_t>(ts.restarts);
  ParamVector params0 = ts.task.params0;
  if (ts.restarts > 0) {
    Rng rng = Rng::derive(cfg.seed ^ restart_stream, static_cast<std::uint64_t>(ts.restarts));
    params0 = mlp_init(dist.net, rng.raw());
  }
  CollocationSet colloc = sample_collocation(
      ts.task.problem, inner.counts,
      cfg.seed ^ (restart_stream + 0x51ULL));

  TrainConfig train_cfg = inner.train;
  train_cfg.record_history = false;
  train_cfg.seed = cfg.seed ^ (restart_stream + 0x7EULL);

  ts.particles.clear();
  for (int p = 0; p < cfg.n_particles; ++p) {
    Particle particle;
    particle.trainer = std::make_unique<Trainer>(
        model_for(ts.task.problem, dist.net), params0,
        std::make_unique<LearnedOptimizer>(fresh_optimizer(theta, inner)), colloc, train_cfg);
    particle.xi_cum = Eigen::VectorXd::Zero(theta.size());
    ts.particles.push_back(std::move(particle));
  }
}

}  // namespace

Task sample_task(const TaskDistribution& dist, int index, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, 0x7A5BAD00ULL + static_cast<std::uint64_t>(index));
  Task task;
  switch (dist.kind) {
    case TaskKind::reinit_only:
      task.problem = problem_by_name(dist.base_problem);
      task.descriptor = {{"kind", "reinit_only"}, {"problem", dist.base_problem}};
      break;
    case TaskKind::kdv_ic_family: {
      if (dist.base_problem != "kdv")
        throw std::invalid_argument("sample_task: kdv_ic_family requires base problem kdv");
      int k = 1 + static_cast<int>(rng.integer(3));
      double phi = rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
      task.problem = kdv_problem(0.0025);
      task.problem.ic = kdv_initial_family(k, phi, dist.kdv_k_times_pi);
      task.descriptor = {{"kind", "kdv_ic_family"}, {"k", k}, {"phi", phi},
                         {"k_times_pi", dist.kdv_k_times_pi}};
      break;
    }
    case TaskKind::advection_velocity_family: {
      if (dist.base_problem != "advection")
        throw std::invalid_argument(
            "sample_task: advection_velocity_family requires base problem advection");
      double c = rng.uniform(-1.0, 1.0);
      task.problem = advection_problem(c);
      task.descriptor = {{"kind", "advection_velocity_family"}, {"c", c}};
      break;
    }
  }
  task.params0 = mlp_init(dist.net, rng.raw());
  return task;
}

std::optional<Eigen::VectorXd> pes_gradient(std::span<const double> losses,
                                            std::span<const Eigen::VectorXd> xi_cums,
                                            double sigma) {
  if (losses.size() != xi_cums.size() || losses.size() < 2)
    throw std::invalid_argument("pes_gradient: need one accumulator per particle, >= 2");
  for (double l : losses)
    if (!std::isfinite(l)) return std::nullopt;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(xi_cums[0].size());
  for (std::size_t i = 0; i < losses.size(); ++i) g += xi_cums[i] * losses[i];
  g /= static_cast<double>(losses.size()) * sigma * sigma;
  return g;
}

ParamVector meta_initial_theta(std::uint64_t seed) {
  return optimizer_mlp_init(Rng::derive(seed, 0x1817ULL).raw());
}

MetaResult meta_train(const TaskDistribution& dist, const MetaConfig& cfg,
                      const InnerSetup& inner) {
  if (cfg.n_particles < 2 || cfg.n_particles % 2 != 0)
    throw std::invalid_argument("meta_train: particle count must be even and >= 2");

  ParamVector theta = meta_initial_theta(cfg.seed);

  std::vector<TaskState> tasks;
  tasks.reserve(static_cast<std::size_t>(cfg.n_tasks));
  for (int i = 0; i < cfg.n_tasks; ++i) {
    TaskState ts;
    ts.task = sample_task(dist, i, cfg.seed);
    start_particles(ts, dist, cfg, inner, theta);
    tasks.push_back(std::move(ts));
  }

  MetaResult result;
  std::vector<double> losses(static_cast<std::size_t>(cfg.n_particles));
  std::vector<Eigen::VectorXd> xis(static_cast<std::size_t>(cfg.n_particles));

  for (int me = 0; me < cfg.meta_epochs; ++me) {
    for (int ti = 0; ti < cfg.n_tasks; ++ti) {
      TaskState& ts = tasks[static_cast<std::size_t>(ti)];
      if (ts.dropped) continue;

      // Fresh antithetic perturbations for this unroll.
      Rng rng = Rng::derive(cfg.seed ^ 0xE5E5ULL,
                            static_cast<std::uint64_t>(me) * 1000003ULL +
                                static_cast<std::uint64_t>(ti));
      for (int p = 0; p < cfg.n_particles; p += 2) {
        Eigen::VectorXd eps(theta.size());
        for (Eigen::Index j = 0; j < eps.size(); ++j) eps(j) = cfg.sigma * rng.normal();
        auto& even = ts.particles[static_cast<std::size_t>(p)];
        auto& odd = ts.particles[static_cast<std::size_t>(p) + 1];
        even.xi_cum += eps;
        odd.xi_cum -= eps;
        static_cast<LearnedOptimizer&>(even.trainer->optimizer()).set_meta_params(theta + eps);
        static_cast<LearnedOptimizer&>(odd.trainer->optimizer()).set_meta_params(theta - eps);
      }

      bool ok = true;
      double loss_sum = 0.0;
      for (int p = 0; p < cfg.n_particles; ++p) {
        auto& particle = ts.particles[static_cast<std::size_t>(p)];
        double mean_loss = particle.trainer->run_epochs(cfg.unroll_epochs);
        losses[static_cast<std::size_t>(p)] = mean_loss;
        xis[static_cast<std::size_t>(p)] = particle.xi_cum;
        loss_sum += mean_loss;
        if (!std::isfinite(mean_loss) || particle.trainer->diverged()) ok = false;
      }

      MetaLogRow row;
      row.meta_epoch = me;
      row.task = ti;
      row.mean_inner_loss = loss_sum / cfg.n_particles;

      if (!ok) {
        // Unusable unroll: skip the update and restart the inner run.
        row.grad_norm = 0.0;
        result.log.push_back(row);
        ts.restarts += 1;
        ts.consecutive_failures += 1;
        if (ts.consecutive_failures > kMaxTaskRestarts) {
          ts.dropped = true;
          result.dropped_tasks.push_back(ti);
        } else {
          start_particles(ts, dist, cfg, inner, theta);
        }
        continue;
      }
      ts.consecutive_failures = 0;

      std::optional<Eigen::VectorXd> ghat = pes_gradient(losses, xis, cfg.sigma);
      row.grad_norm = ghat ? ghat->norm() : 0.0;
      result.log.push_back(row);
      if (ghat) theta -= cfg.alpha * *ghat;

      // Particles whose inner run finished restart from a fresh seed.
      if (ts.particles[0].trainer->epoch() >= inner.train.epochs) {
        ts.restarts += 1;
        start_particles(ts, dist, cfg, inner, theta);
      }
    }
  }

  OptimizerCheckpoint ckpt;
  ckpt.theta = std::move(theta);
  ckpt.lambda = inner.lambda;
  ckpt.epsilon = inner.epsilon;
  ckpt.provenance = {{"n_tasks", cfg.n_tasks},
                     {"meta_epochs", cfg.meta_epochs},
                     {"n_particles", cfg.n_particles},
                     {"unroll_epochs", cfg.unroll_epochs},
                     {"sigma", cfg.sigma},
                     {"alpha", cfg.alpha},
                     {"seed", cfg.seed},
                     {"distribution", dist.kind == TaskKind::reinit_only
                                          ? "reinit_only"
                                          : dist.kind == TaskKind::kdv_ic_family
                                                ? "kdv_ic_family"
                                                : "advection_velocity_family"},
                     {"base_problem", dist.base_problem},
                     {"dropped_tasks", result.dropped_tasks}};
  if (dist.kind == TaskKind::kdv_ic_family)
    ckpt.provenance["family"] = {{"k", {1, 2, 3}}, {"phi", {-std::numbers::pi / 2, std::numbers::pi / 2}},
                                 {"k_times_pi", dist.kdv_k_times_pi}};
  if (dist.kind == TaskKind::advection_velocity_family)
    ckpt.provenance["family"] = {{"c", {-1.0, 1.0}}};
  result.checkpoint = std::move(ckpt);
  return result;
}

void write_meta_log(const std::vector<MetaLogRow>& log, std::ostream& out) {
  out << "meta_epoch,task,mean_inner_loss,grad_norm\n";
  char buf[128];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g\n", r.meta_epoch, r.task,
                  r.mean_inner_loss, r.grad_norm);
    out << buf;
  }
}

}  // namespace pinnopt
