#include "pinnopt/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "pinnopt/refsolve.hpp"
#include "pinnopt/rng.hpp"

namespace pinnopt {

namespace {

constexpr double kPi = std::numbers::pi;

void write_csv_matrix(const std::string& path, const std::string& header,
                      const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << header << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf << (j + 1 < m.cols() ? "," : "\n");
    }
  }
}

Eigen::VectorXd linspace(double lo, double hi, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = lo + (hi - lo) * i / (n - 1);
  return v;
}

// Reference values on the evaluation grid: analytic handles for advection
// and Poisson, the pseudo-spectral solver for KdV and Burgers.
class ReferenceEvaluator {
 public:
  ReferenceEvaluator(const PdeProblem& problem, const Eigen::VectorXd& t_values,
                     const ExperimentConfig& cfg)
      : problem_(&problem) {
    if (problem.reference == ReferenceKind::spectral) {
      IntegratorConfig icfg;
      icfg.rtol = cfg.reference_rtol;
      icfg.atol = cfg.reference_rtol;
      Field u0 = initial_field(problem, cfg.reference_n);
      std::vector<double> ts(t_values.data(), t_values.data() + t_values.size());
      fields_ = integrate(problem, u0, ts, icfg);
      interpolants_.reserve(fields_.size());
      for (const Field& f : fields_) interpolants_.emplace_back(f);
    }
  }

  // it indexes the t grid for spectral problems.
  double operator()(int it, double a, double b) const {
    if (problem_->reference == ReferenceKind::analytic) return problem_->exact(Point(a, b));
    return interpolants_[static_cast<std::size_t>(it)](b);
  }

 private:
  const PdeProblem* problem_;
  std::vector<Field> fields_;
  std::vector<TrigInterpolant> interpolants_;
};

Eigen::MatrixXd evaluation_grid(const PinnModel& model, const ParamVector& params,
                                const ExperimentConfig& cfg,
                                const ReferenceEvaluator& ref) {
  const int g = cfg.grid_points;
  const Domain& dom = model.problem.domain;
  Eigen::VectorXd as, bs;
  if (dom.time_dependent()) {
    as = linspace((*dom.t_range)[0], (*dom.t_range)[1], g);
    bs = linspace(dom.x_ranges[0][0], dom.x_ranges[0][1], g);
  } else {
    as = linspace(dom.x_ranges[0][0], dom.x_ranges[0][1], g);
    bs = linspace(dom.x_ranges[1][0], dom.x_ranges[1][1], g);
  }

  Eigen::MatrixXd inputs(model.spec.input_width(), g * g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      if (model.embedding == Embedding::periodic_x)
        inputs.col(i * g + j) = periodic_embed(as(i), bs(j), dom.x_ranges[0]);
      else
        inputs.col(i * g + j) = Eigen::Vector2d(as(i), bs(j));
    }
  Eigen::MatrixXd u_nn = mlp_forward_batch(model.spec, params, inputs);

  Eigen::MatrixXd grid(g * g, 5);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      const int r = i * g + j;
      const double u_ref = ref(i, as(i), bs(j));
      grid(r, 0) = as(i);
      grid(r, 1) = bs(j);
      grid(r, 2) = u_nn(0, r);
      grid(r, 3) = u_ref;
      grid(r, 4) = u_nn(0, r) - u_ref;
    }
  return grid;
}

int first_epoch_reaching(const LossHistory& history, double target) {
  for (const auto& rec : history.records)
    if (rec.total <= target) return rec.epoch;
  return -1;
}

nlohmann::json history_to_json(const LossHistory& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : h.records)
    rows.push_back({{"epoch", r.epoch}, {"total", r.total}, {"pde", r.pde}, {"ic", r.ic},
                    {"bc", r.bc}});
  return {{"status", h.status == TrainStatus::ok ? "ok" : "diverged"}, {"records", rows}};
}

LossHistory history_from_json(const nlohmann::json& j) {
  LossHistory h;
  h.status = j.at("status").get<std::string>() == "ok" ? TrainStatus::ok : TrainStatus::diverged;
  for (const auto& row : j.at("records")) {
    LossRecord r;
    r.epoch = row.at("epoch").get<int>();
    r.total = row.at("total").get<double>();
    r.pde = row.at("pde").get<double>();
    r.ic = row.at("ic").get<double>();
    r.bc = row.at("bc").get<double>();
    h.records.push_back(r);
  }
  return h;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(const std::string& problem) {
  ExperimentConfig cfg;
  cfg.problem = problem;
  if (problem == "advection") {
    cfg.hidden_layers = 2;
    cfg.icbc_points = 100;
    cfg.epochs = 3000;
    cfg.eta = 1e-3;
    cfg.lambda = {1e-3, 1e-3, 1e-3, 1e-3};
    cfg.gamma_i = 1.0;
    cfg.gamma_b = 0.0;
  } else if (problem == "poisson") {
    cfg.hidden_layers = 4;
    cfg.icbc_points = 400;
    cfg.epochs = 2000;
    cfg.eta = 1e-3;
    cfg.lambda = {1e-3, 1e-3, 1e-3, 1e-3};
    cfg.gamma_i = 0.0;
    cfg.gamma_b = 1000.0;
  } else if (problem == "kdv" || problem == "burgers") {
    cfg.hidden_layers = 6;
    cfg.icbc_points = 100;
    cfg.epochs = 1000;
    cfg.eta = 5e-4;
    cfg.lambda = {5e-4, 1e-3, 1e-3, 1e-3};
    cfg.gamma_i = 1.0;
    cfg.gamma_b = 0.0;
    cfg.nu = problem == "kdv" ? 0.0025 : 0.01 / kPi;
  } else {
    throw std::invalid_argument("unknown problem: " + problem);
  }
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"schema", "pinnopt-experiment-v1"},
          {"problem", problem},
          {"hidden_layers", hidden_layers},
          {"units", units},
          {"pde_points", pde_points},
          {"icbc_points", icbc_points},
          {"epochs", epochs},
          {"minibatches", minibatches},
          {"eta", eta},
          {"lambda", lambda},
          {"gamma_i", gamma_i},
          {"gamma_b", gamma_b},
          {"advection_c", advection_c},
          {"nu", nu},
          {"seed", seed},
          {"grid_points", grid_points},
          {"reference_n", reference_n},
          {"reference_rtol", reference_rtol}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (j.at("schema").get<std::string>() != "pinnopt-experiment-v1")
    throw std::invalid_argument("unsupported experiment schema");
  ExperimentConfig cfg;
  cfg.problem = j.at("problem").get<std::string>();
  cfg.hidden_layers = j.at("hidden_layers").get<int>();
  cfg.units = j.at("units").get<int>();
  cfg.pde_points = j.at("pde_points").get<int>();
  cfg.icbc_points = j.at("icbc_points").get<int>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.minibatches = j.at("minibatches").get<int>();
  cfg.eta = j.at("eta").get<double>();
  auto lam = j.at("lambda").get<std::vector<double>>();
  std::copy(lam.begin(), lam.end(), cfg.lambda.begin());
  cfg.gamma_i = j.at("gamma_i").get<double>();
  cfg.gamma_b = j.at("gamma_b").get<double>();
  cfg.advection_c = j.at("advection_c").get<double>();
  cfg.nu = j.at("nu").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.grid_points = j.at("grid_points").get<int>();
  cfg.reference_n = j.at("reference_n").get<int>();
  cfg.reference_rtol = j.at("reference_rtol").get<double>();
  return cfg;
}

PdeProblem make_problem(const ExperimentConfig& cfg) {
  PdeProblem p;
  if (cfg.problem == "advection")
    p = advection_problem(cfg.advection_c);
  else if (cfg.problem == "poisson")
    p = poisson_problem();
  else if (cfg.problem == "kdv")
    p = kdv_problem(cfg.nu != 0.0 ? cfg.nu : 0.0025);
  else if (cfg.problem == "burgers")
    p = burgers_problem(cfg.nu != 0.0 ? cfg.nu : 0.01 / kPi);
  else
    throw std::invalid_argument("unknown problem: " + cfg.problem);
  p.gamma_i = cfg.gamma_i;
  p.gamma_b = cfg.gamma_b;
  return p;
}

PinnModel make_model_from_config(const ExperimentConfig& cfg) {
  return make_model(make_problem(cfg), cfg.hidden_layers, cfg.units);
}

ComparisonReport run_comparison(const ExperimentConfig& cfg, const OptimizerCheckpoint& ckpt) {
  ComparisonReport report;
  report.cfg = cfg;

  PinnModel model = make_model_from_config(cfg);
  CollocationSet colloc = sample_collocation(
      model.problem, {cfg.pde_points, cfg.icbc_points, cfg.icbc_points}, cfg.seed);
  report.params0 = mlp_init(model.spec, cfg.seed);

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.minibatches = cfg.minibatches;
  tc.seed = cfg.seed;

  OptimizerCheckpoint used = ckpt;
  used.lambda = cfg.lambda;

  auto run = [&](std::unique_ptr<Optimizer> opt, const std::string& name) {
    RunOutput out;
    Trainer trainer(model, report.params0, std::move(opt), colloc, tc);
    trainer.run_epochs(cfg.epochs);
    out.history = trainer.history();
    out.final_params = trainer.params();
    out.summary.optimizer = name;
    out.summary.diverged = trainer.diverged();
    out.summary.final_loss = trainer.full_loss().total;
    return out;
  };

  report.adam = run(std::make_unique<AdamOptimizer>(cfg.eta), "adam");
  report.learned = run(std::make_unique<LearnedOptimizer>(used), "learned");

  const Domain& dom = model.problem.domain;
  Eigen::VectorXd ts = dom.time_dependent()
                           ? linspace((*dom.t_range)[0], (*dom.t_range)[1], cfg.grid_points)
                           : Eigen::VectorXd();
  ReferenceEvaluator ref(model.problem, ts, cfg);
  for (RunOutput* out : {&report.adam, &report.learned}) {
    out->grid = evaluation_grid(model, out->final_params, cfg, ref);
    out->summary.max_abs_err = out->grid.col(4).cwiseAbs().maxCoeff();
    out->summary.l2_err = std::sqrt(out->grid.col(4).squaredNorm() /
                                    static_cast<double>(out->grid.rows()));
    out->summary.epochs_to_match_adam =
        first_epoch_reaching(out->history, report.adam.summary.final_loss);
  }
  return report;
}

void export_figures_data(const ComparisonReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto path = [&](const std::string& name) { return dir + "/" + name; };
  {
    std::ofstream out(path("loss_adam.csv"));
    report.adam.history.write_csv(out);
  }
  {
    std::ofstream out(path("loss_learned.csv"));
    report.learned.history.write_csv(out);
  }
  const std::string grid_header = "t,x,u_nn,u_ref,e";
  write_csv_matrix(path("grid_adam.csv"), grid_header, report.adam.grid);
  write_csv_matrix(path("grid_learned.csv"), grid_header, report.learned.grid);
  write_csv_matrix(path("grid.csv"), grid_header, report.learned.grid);
  {
    std::ofstream out(path("summary.csv"));
    out << "optimizer,final_loss,max_abs_err,l2_err,epochs_to_match_adam,diverged\n";
    char buf[256];
    for (const RunSummary* s : {&report.adam.summary, &report.learned.summary}) {
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%d,%d\n", s->optimizer.c_str(),
                    s->final_loss, s->max_abs_err, s->l2_err, s->epochs_to_match_adam,
                    s->diverged ? 1 : 0);
      out << buf;
    }
  }
}

namespace {

nlohmann::json summary_to_json(const RunSummary& s) {
  return {{"optimizer", s.optimizer},       {"final_loss", s.final_loss},
          {"max_abs_err", s.max_abs_err},   {"l2_err", s.l2_err},
          {"epochs_to_match_adam", s.epochs_to_match_adam}, {"diverged", s.diverged}};
}

RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  s.optimizer = j.at("optimizer").get<std::string>();
  s.final_loss = j.at("final_loss").get<double>();
  s.max_abs_err = j.at("max_abs_err").get<double>();
  s.l2_err = j.at("l2_err").get<double>();
  s.epochs_to_match_adam = j.at("epochs_to_match_adam").get<int>();
  s.diverged = j.at("diverged").get<bool>();
  return s;
}

}  // namespace

void write_report(const ComparisonReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  export_figures_data(report, dir);
  nlohmann::json j;
  j["schema"] = "pinnopt-report-v1";
  j["config"] = report.cfg.to_json();
  j["params0"] = vector_to_json(report.params0);
  j["adam"] = {{"history", history_to_json(report.adam.history)},
               {"final_params", vector_to_json(report.adam.final_params)},
               {"summary", summary_to_json(report.adam.summary)}};
  j["learned"] = {{"history", history_to_json(report.learned.history)},
                  {"final_params", vector_to_json(report.learned.final_params)},
                  {"summary", summary_to_json(report.learned.summary)}};
  std::ofstream out(dir + "/report.json");
  out << j.dump() << "\n";
}

ComparisonReport load_report(const std::string& dir) {
  std::ifstream in(dir + "/report.json");
  if (!in) throw std::runtime_error("load_report: cannot open " + dir + "/report.json");
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("schema").get<std::string>() != "pinnopt-report-v1")
    throw std::runtime_error("load_report: unsupported schema");
  ComparisonReport report;
  report.cfg = ExperimentConfig::from_json(j.at("config"));
  report.params0 = vector_from_json(j.at("params0"));
  for (auto [name, out] : {std::pair{"adam", &report.adam}, {"learned", &report.learned}}) {
    const auto& src = j.at(name);
    out->history = history_from_json(src.at("history"));
    out->final_params = vector_from_json(src.at("final_params"));
    out->summary = summary_from_json(src.at("summary"));
  }

  PinnModel model = make_model_from_config(report.cfg);
  const Domain& dom = model.problem.domain;
  Eigen::VectorXd ts = dom.time_dependent()
                           ? linspace((*dom.t_range)[0], (*dom.t_range)[1],
                                      report.cfg.grid_points)
                           : Eigen::VectorXd();
  ReferenceEvaluator ref(model.problem, ts, report.cfg);
  report.adam.grid = evaluation_grid(model, report.adam.final_params, report.cfg, ref);
  report.learned.grid = evaluation_grid(model, report.learned.final_params, report.cfg, ref);
  return report;
}

std::string run_meta(const ExperimentConfig& cfg, const MetaConfig& meta, TaskKind kind,
                     const std::string& out_dir) {
  TaskDistribution dist;
  dist.kind = kind;
  dist.base_problem = cfg.problem;
  dist.net = make_model_from_config(cfg).spec;

  InnerSetup inner;
  inner.counts = {cfg.pde_points, cfg.icbc_points, cfg.icbc_points};
  inner.train.epochs = cfg.epochs;
  inner.train.minibatches = cfg.minibatches;
  inner.lambda = cfg.lambda;

  MetaResult result = meta_train(dist, meta, inner);

  std::filesystem::create_directories(out_dir);
  const std::string ckpt_path = out_dir + "/opt.ckpt";
  save_checkpoint(result.checkpoint, ckpt_path);
  std::ofstream log(out_dir + "/meta_log.csv");
  write_meta_log(result.log, log);
  return ckpt_path;
}

void write_reference_csv(const ExperimentConfig& cfg, const std::string& path) {
  PinnModel model = make_model_from_config(cfg);
  const Domain& dom = model.problem.domain;
  const int g = cfg.grid_points;
  Eigen::VectorXd as, bs;
  if (dom.time_dependent()) {
    as = linspace((*dom.t_range)[0], (*dom.t_range)[1], g);
    bs = linspace(dom.x_ranges[0][0], dom.x_ranges[0][1], g);
  } else {
    as = linspace(dom.x_ranges[0][0], dom.x_ranges[0][1], g);
    bs = linspace(dom.x_ranges[1][0], dom.x_ranges[1][1], g);
  }
  ReferenceEvaluator ref(model.problem, as, cfg);
  Eigen::MatrixXd m(g * g, 3);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      m(i * g + j, 0) = as(i);
      m(i * g + j, 1) = bs(j);
      m(i * g + j, 2) = ref(i, as(i), bs(j));
    }
  write_csv_matrix(path, "t,x,u_ref", m);
}

}  // namespace pinnopt
