#include "pinnopt/pinn.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "pinnopt/rng.hpp"
#include "pinnopt/taylor.hpp"

namespace pinnopt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

JetBatch embed_inputs(const PinnModel& model, const Eigen::MatrixX2d& pts,
                      const TaylorLayout& lay) {
  const int n = static_cast<int>(pts.rows());
  JetBatch in = make_jet_batch(lay, model.spec.input_width(), n);
  if (model.embedding == Embedding::periodic_x) {
    const auto [lo, hi] = model.problem.domain.x_ranges[0];
    const double inv_len = 1.0 / (hi - lo);
    for (int p = 0; p < n; ++p) {
      Jet t = Jet::variable(lay, pts(p, 0), 0);
      Jet x = Jet::variable(lay, pts(p, 1), 1);
      Jet xi = (x - lo) * inv_len;
      xi.coeff(0) -= std::floor(xi.coeff(0));  // endpoints embed identically
      Jet ang = xi * kTwoPi;
      Jet c = cos(ang);
      Jet s = sin(ang);
      for (int k = 0; k < lay.ncoeff; ++k) {
        in[static_cast<std::size_t>(k)](0, p) = t.coeff(k);
        in[static_cast<std::size_t>(k)](1, p) = c.coeff(k);
        in[static_cast<std::size_t>(k)](2, p) = s.coeff(k);
      }
    }
  } else {
    for (int p = 0; p < n; ++p) {
      Jet x = Jet::variable(lay, pts(p, 0), 0);
      Jet y = Jet::variable(lay, pts(p, 1), 1);
      for (int k = 0; k < lay.ncoeff; ++k) {
        in[static_cast<std::size_t>(k)](0, p) = x.coeff(k);
        in[static_cast<std::size_t>(k)](1, p) = y.coeff(k);
      }
    }
  }
  return in;
}

}  // namespace

// Evaluates the three loss terms over fixed point sets, batched per term.
// Owns the embedded input jets (parameter-independent) and the jet engines.
class LossEngine {
 public:
  LossEngine(const PinnModel& model, const CollocationSet& colloc)
      : model_(&model),
        pde_lay_(&TaylorLayout::get(2, model.problem.max_derivative_order)),
        val_lay_(&TaylorLayout::get(2, 0)),
        pde_pts_(colloc.pde_points),
        ic_pts_(colloc.ic_points),
        bc_pts_(colloc.bc_points) {
    pde_net_ = std::make_unique<JetMlp>(model.spec, *pde_lay_);
    chunk_net_ = std::make_unique<JetMlp>(model.spec, *pde_lay_);
    pde_in_ = embed_inputs(model, pde_pts_, *pde_lay_);
    if (ic_pts_.rows() > 0 && model.problem.ic) {
      ic_net_ = std::make_unique<JetMlp>(model.spec, *val_lay_);
      ic_in_ = embed_inputs(model, ic_pts_, *val_lay_);
      ic_targets_.resize(ic_pts_.rows());
      for (Eigen::Index p = 0; p < ic_pts_.rows(); ++p)
        ic_targets_(p) = model.problem.ic(ic_pts_(p, 1));
    }
    if (bc_pts_.rows() > 0 && model.problem.bc.kind == BoundaryKind::dirichlet) {
      bc_net_ = std::make_unique<JetMlp>(model.spec, *val_lay_);
      bc_in_ = embed_inputs(model, bc_pts_, *val_lay_);
      bc_targets_.resize(bc_pts_.rows());
      for (Eigen::Index p = 0; p < bc_pts_.rows(); ++p)
        bc_targets_(p) = model.problem.bc.dirichlet_value(bc_pts_.row(p).transpose());
    }
  }

  void reset_pde_points(const Eigen::MatrixX2d& pts) {
    pde_pts_ = pts;
    pde_in_ = embed_inputs(*model_, pde_pts_, *pde_lay_);
  }

  LossRecord loss(const ParamVector& params, const LossWeights& w) {
    LossRecord rec;
    rec.pde = pde_term(params, *pde_net_, pde_in_, pde_pts_, nullptr);
    rec.ic = ic_net_ ? value_term(params, *ic_net_, ic_in_, ic_targets_, 0.0, nullptr) : 0.0;
    rec.bc = bc_net_ ? value_term(params, *bc_net_, bc_in_, bc_targets_, 0.0, nullptr) : 0.0;
    rec.total = rec.pde + w.gamma_i * rec.ic + w.gamma_b * rec.bc;
    return rec;
  }

  std::pair<LossRecord, Eigen::VectorXd> loss_grad(const ParamVector& params,
                                                   const LossWeights& w) {
    return grad_impl(params, w, *pde_net_, pde_in_, pde_pts_);
  }

  std::pair<LossRecord, Eigen::VectorXd> minibatch_loss_grad(const ParamVector& params,
                                                             const LossWeights& w,
                                                             const std::vector<int>& chunk) {
    gather_chunk(chunk);
    return grad_impl(params, w, *chunk_net_, chunk_in_, chunk_pts_);
  }

  const Eigen::MatrixX2d& pde_points() const { return pde_pts_; }

 private:
  std::pair<LossRecord, Eigen::VectorXd> grad_impl(const ParamVector& params,
                                                   const LossWeights& w, JetMlp& pde_net,
                                                   const JetBatch& pde_in,
                                                   const Eigen::MatrixX2d& pde_pts) {
    LossRecord rec;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(model_->spec.param_count());
    rec.pde = pde_term(params, pde_net, pde_in, pde_pts, &grad);
    rec.ic = ic_net_ ? value_term(params, *ic_net_, ic_in_, ic_targets_, w.gamma_i, &grad) : 0.0;
    rec.bc = bc_net_ ? value_term(params, *bc_net_, bc_in_, bc_targets_, w.gamma_b, &grad) : 0.0;
    rec.total = rec.pde + w.gamma_i * rec.ic + w.gamma_b * rec.bc;
    return {rec, std::move(grad)};
  }

  double pde_term(const ParamVector& params, JetMlp& net, const JetBatch& in,
                  const Eigen::MatrixX2d& pts, Eigen::VectorXd* grad) {
    const int n = static_cast<int>(pts.rows());
    if (n == 0) return 0.0;
    net.forward(params, in);
    const JetBatch& out = net.output();
    const TaylorLayout& lay = *pde_lay_;
    SolutionJet<double> jet, dres;
    jet.order = dres.order = lay.order;
    if (grad) {
      adj_.resize(static_cast<std::size_t>(lay.ncoeff));
      for (auto& m : adj_) m.setZero(1, n);
    }
    double acc = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int k = 0; k < lay.ncoeff; ++k)
        jet.d[static_cast<std::size_t>(k)] = out[static_cast<std::size_t>(k)](0, p) * lay.factorial_scale(k);
      const Point pt = pts.row(p).transpose();
      double r;
      if (grad) {
        model_->problem.residual_grad(pt, jet, r, dres);
        const double s = 2.0 * r / n;
        for (int k = 0; k < lay.ncoeff; ++k)
          adj_[static_cast<std::size_t>(k)](0, p) = s * dres.d[static_cast<std::size_t>(k)] * lay.factorial_scale(k);
      } else {
        r = model_->problem.residual(pt, jet);
      }
      acc += r * r;
    }
    if (grad) net.pullback(params, adj_, *grad);
    return acc / n;
  }

  double value_term(const ParamVector& params, JetMlp& net, const JetBatch& in,
                    const Eigen::VectorXd& targets, double weight, Eigen::VectorXd* grad) {
    const int n = static_cast<int>(targets.size());
    if (n == 0) return 0.0;
    net.forward(params, in);
    Eigen::VectorXd r = net.output()[0].row(0).transpose() - targets;
    if (grad && weight != 0.0) {
      adj_.resize(1);
      adj_[0] = (weight * 2.0 / n) * r.transpose();
      net.pullback(params, adj_, *grad);
    }
    return r.squaredNorm() / n;
  }

  void gather_chunk(const std::vector<int>& chunk) {
    const int m = static_cast<int>(chunk.size());
    chunk_pts_.resize(m, 2);
    const int nc = pde_lay_->ncoeff;
    chunk_in_.resize(static_cast<std::size_t>(nc));
    for (int k = 0; k < nc; ++k)
      chunk_in_[static_cast<std::size_t>(k)].resize(model_->spec.input_width(), m);
    for (int j = 0; j < m; ++j) {
      chunk_pts_.row(j) = pde_pts_.row(chunk[static_cast<std::size_t>(j)]);
      for (int k = 0; k < nc; ++k)
        chunk_in_[static_cast<std::size_t>(k)].col(j) = pde_in_[static_cast<std::size_t>(k)].col(chunk[static_cast<std::size_t>(j)]);
    }
  }

  const PinnModel* model_;
  const TaylorLayout* pde_lay_;
  const TaylorLayout* val_lay_;
  Eigen::MatrixX2d pde_pts_, ic_pts_, bc_pts_;
  JetBatch pde_in_, ic_in_, bc_in_;
  Eigen::VectorXd ic_targets_, bc_targets_;
  std::unique_ptr<JetMlp> pde_net_, ic_net_, bc_net_, chunk_net_;
  Eigen::MatrixX2d chunk_pts_;
  JetBatch chunk_in_, adj_;
};

PinnModel make_model(const PdeProblem& problem, int hidden_layers, int units) {
  if (hidden_layers < 1 || units < 1)
    throw std::invalid_argument("make_model: need at least one hidden layer and unit");
  PinnModel m;
  m.problem = problem;
  m.embedding = problem.bc.kind == BoundaryKind::periodic_hard ? Embedding::periodic_x
                                                               : Embedding::none;
  m.spec.activation = Activation::tanh;
  m.spec.layer_widths.push_back(m.embedding == Embedding::periodic_x ? 3 : 2);
  for (int i = 0; i < hidden_layers; ++i) m.spec.layer_widths.push_back(units);
  m.spec.layer_widths.push_back(1);
  return m;
}

Eigen::Vector3d periodic_embed(double t, double x, const std::array<double, 2>& x_range) {
  double xi = (x - x_range[0]) / (x_range[1] - x_range[0]);
  xi -= std::floor(xi);
  return {t, std::cos(kTwoPi * xi), std::sin(kTwoPi * xi)};
}

double evaluate_solution(const PinnModel& model, const ParamVector& params, const Point& pt) {
  Eigen::VectorXd in;
  if (model.embedding == Embedding::periodic_x)
    in = periodic_embed(pt(0), pt(1), model.problem.domain.x_ranges[0]);
  else
    in = pt;
  return mlp_forward(model.spec, params, in)(0);
}

SolutionJet<double> solution_jet_at(const PinnModel& model, const ParamVector& params,
                                    const Point& pt, int order) {
  const TaylorLayout& lay = TaylorLayout::get(2, order);
  Eigen::MatrixX2d pts(1, 2);
  pts.row(0) = pt.transpose();
  JetMlp net(model.spec, lay);
  net.forward(params, embed_inputs(model, pts, lay));
  SolutionJet<double> jet;
  jet.order = order;
  for (int k = 0; k < lay.ncoeff; ++k)
    jet.d[static_cast<std::size_t>(k)] = net.output()[static_cast<std::size_t>(k)](0, 0) * lay.factorial_scale(k);
  return jet;
}

double pde_residual_at(const PinnModel& model, const ParamVector& params, const Point& pt) {
  SolutionJet<double> jet = solution_jet_at(model, params, pt, model.problem.max_derivative_order);
  return model.problem.residual(pt, jet);
}

LossRecord composite_loss(const PinnModel& model, const ParamVector& params,
                          const CollocationSet& colloc, const LossWeights& weights) {
  LossEngine engine(model, colloc);
  return engine.loss(params, weights);
}

std::pair<LossRecord, Eigen::VectorXd> composite_loss_grad(const PinnModel& model,
                                                           const ParamVector& params,
                                                           const CollocationSet& colloc,
                                                           const LossWeights& weights) {
  LossEngine engine(model, colloc);
  return engine.loss_grad(params, weights);
}

void LossHistory::write_csv(std::ostream& out) const {
  out << "epoch,total,pde,ic,bc\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.total, r.pde,
                  r.ic, r.bc);
    out << buf;
  }
}

Trainer::Trainer(PinnModel model, ParamVector params0, std::unique_ptr<Optimizer> optimizer,
                 CollocationSet colloc, TrainConfig config)
    : model_(std::move(model)),
      params_(std::move(params0)),
      optimizer_(std::move(optimizer)),
      colloc_(std::move(colloc)),
      config_(config) {
  if (params_.size() != model_.spec.param_count())
    throw std::invalid_argument("Trainer: params0 length mismatch");
  if (config_.minibatches < 1 || config_.minibatches > colloc_.pde_points.rows())
    throw std::invalid_argument("Trainer: minibatch count out of range");
  weights_.gamma_i = model_.problem.gamma_i;
  weights_.gamma_b = model_.problem.gamma_b;
  engine_ = std::make_unique<LossEngine>(model_, colloc_);
}

Trainer::~Trainer() = default;

LossRecord Trainer::full_loss() {
  LossRecord rec = engine_->loss(params_, weights_);
  rec.epoch = epoch_;
  return rec;
}

double Trainer::run_epochs(int n) {
  double window_sum = 0.0;
  long window_count = 0;
  const int npde = static_cast<int>(engine_->pde_points().rows());

  for (int e = 0; e < n && !diverged(); ++e) {
    if (config_.resample_collocation && epoch_ > 0) {
      Rng rng = Rng::derive(config_.seed, 0x5A3E0000ULL + static_cast<std::uint64_t>(epoch_));
      Eigen::MatrixX2d pts(npde, 2);
      const Domain& dom = model_.problem.domain;
      if (dom.time_dependent()) {
        for (int i = 0; i < npde; ++i) {
          pts(i, 0) = rng.uniform((*dom.t_range)[0], (*dom.t_range)[1]);
          pts(i, 1) = rng.uniform(dom.x_ranges[0][0], dom.x_ranges[0][1]);
        }
      } else {
        for (int i = 0; i < npde; ++i) {
          pts(i, 0) = rng.uniform(dom.x_ranges[0][0], dom.x_ranges[0][1]);
          pts(i, 1) = rng.uniform(dom.x_ranges[1][0], dom.x_ranges[1][1]);
        }
      }
      engine_->reset_pde_points(pts);
    }

    if (config_.record_history) {
      LossRecord rec = full_loss();
      history_.records.push_back(rec);
      if (!std::isfinite(rec.total)) {
        history_.status = TrainStatus::diverged;
        break;
      }
    }

    // Seeded partition of the PDE points into disjoint minibatches.
    std::vector<int> perm(static_cast<std::size_t>(npde));
    for (int i = 0; i < npde; ++i) perm[static_cast<std::size_t>(i)] = i;
    Rng shuffler = Rng::derive(config_.seed, 0xBA7C4000ULL + static_cast<std::uint64_t>(epoch_));
    shuffler.shuffle(std::span<int>(perm));

    const int nb = config_.minibatches;
    const int base = npde / nb;
    const int rem = npde % nb;
    int offset = 0;
    for (int b = 0; b < nb; ++b) {
      const int size = base + (b < rem ? 1 : 0);
      std::vector<int> chunk(perm.begin() + offset, perm.begin() + offset + size);
      offset += size;
      auto [rec, grad] = engine_->minibatch_loss_grad(params_, weights_, chunk);
      window_sum += rec.total;
      ++window_count;
      if (!std::isfinite(rec.total) || rec.total > config_.divergence_threshold) {
        history_.status = TrainStatus::diverged;
        break;
      }
      if (optimizer_->step(params_, grad) == Optimizer::Status::diverged ||
          !params_.allFinite()) {
        history_.status = TrainStatus::diverged;
        break;
      }
    }
    ++epoch_;
  }
  return window_count > 0 ? window_sum / static_cast<double>(window_count) : 0.0;
}

TrainResult train(const PinnModel& model, const ParamVector& params0,
                  std::unique_ptr<Optimizer> optimizer, const CollocationSet& colloc,
                  const TrainConfig& config) {
  Trainer trainer(model, params0, std::move(optimizer), colloc, config);
  trainer.run_epochs(config.epochs);
  TrainResult result;
  result.history = trainer.history();
  result.params = trainer.params();
  result.status = trainer.history().status;
  return result;
}

}  // namespace pinnopt
