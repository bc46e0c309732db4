#include "infusion/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace infusion {

void TrainConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
  if (!(eta0 > 0.0)) throw std::invalid_argument("TrainConfig: eta0 must be > 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (val_k < 1) throw std::invalid_argument("TrainConfig: val_k must be >= 1");
  schedule.validate();
}

double eta_at(const TrainConfig& cfg, int t) {
  if (t < 1 || t > cfg.steps) {
    throw std::out_of_range("eta_at: t=" + std::to_string(t) + " outside 1.." + std::to_string(cfg.steps));
  }
  return cfg.eta0 * static_cast<double>(t) / static_cast<double>(cfg.steps);
}

namespace {

class SgdOptimizer : public Optimizer {
 public:
  explicit SgdOptimizer(std::vector<Parameter*> params) : params_(std::move(params)) {}
  void step(double lr) override {
    for (Parameter* p : params_) {
      for (std::size_t i = 0; i < p->value.numel(); ++i) p->value[i] -= lr * p->grad[i];
    }
  }

 private:
  std::vector<Parameter*> params_;
};

class AdamOptimizer : public Optimizer {
 public:
  AdamOptimizer(std::vector<Parameter*> params, double b1, double b2, double eps)
      : params_(std::move(params)), b1_(b1), b2_(b2), eps_(eps) {
    for (Parameter* p : params_) {
      m_.push_back(Tensor::zeros(p->value.shape()));
      v_.push_back(Tensor::zeros(p->value.shape()));
    }
  }

  void step(double lr) override {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, t_);
    const double c2 = 1.0 - std::pow(b2_, t_);
    for (std::size_t j = 0; j < params_.size(); ++j) {
      Parameter* p = params_[j];
      for (std::size_t i = 0; i < p->value.numel(); ++i) {
        const double g = p->grad[i];
        m_[j][i] = b1_ * m_[j][i] + (1.0 - b1_) * g;
        v_[j][i] = b2_ * v_[j][i] + (1.0 - b2_) * g * g;
        p->value[i] -= lr * (m_[j][i] / c1) / (std::sqrt(v_[j][i] / c2) + eps_);
      }
    }
  }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  double b1_, b2_, eps_;
  int t_ = 0;
};

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->zero_grad();
}

std::vector<Tensor> snapshot(const std::vector<Parameter*>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<Parameter*>& params, const std::vector<Tensor>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg, std::vector<Parameter*> params) {
  if (cfg.optimizer == OptimizerKind::Sgd) return std::make_unique<SgdOptimizer>(std::move(params));
  return std::make_unique<AdamOptimizer>(std::move(params), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
}

double clip_gradient_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->grad.numel(); ++i) sq += p->grad[i] * p->grad[i];
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params) {
      for (std::size_t i = 0; i < p->grad.numel(); ++i) p->grad[i] *= s;
    }
  }
  return norm;
}

Var denoising_objective(Tape& tape, TransitionOperator& op, const std::vector<Tensor>& states, const Tensor& x,
                        int T) {
  if (static_cast<int>(states.size()) != T) {
    throw std::invalid_argument("denoising_objective: expected " + std::to_string(T) + " proposal states, got " +
                                std::to_string(states.size()));
  }
  Var xc = tape.constant(x);
  Var obj = tape.constant(Tensor::scalar(0.0));
  for (int t = 1; t <= T; ++t) {
    Var z_prev = tape.constant(states[static_cast<std::size_t>(t - 1)]);
    auto out = op.forward(tape, z_prev, t, Mode::Train, /*with_grad=*/true);
    Var ll = gaussian_log_density(xc, out.mean, out.var);
    const double w = static_cast<double>(t) / static_cast<double>(T);  // eta(t)/eta0
    obj = add(obj, scale(mean_all(ll), w));
  }
  return obj;
}

Var lower_bound_objective(Tape& tape, TransitionOperator& op, const FactorialGaussian& prior,
                          const InfusionSchedule& sched, const Tensor& x, int T, Rng& rng) {
  if (T < 1) throw std::invalid_argument("lower_bound_objective: T must be >= 1");
  sched.validate();
  const std::size_t n = x.rows(), d = x.cols();
  const double sd = sched.sigma_delta;

  // Draw the branch pattern and noise for one step; identical rng
  // consumption to infusion_step (per row: d uniforms, then d normals).
  auto draw_step = [&](double alpha, Tensor& keep_model, Tensor& eps) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) keep_model.at(r, c) = rng.uniform() < alpha ? 0.0 : 1.0;
      for (std::size_t c = 0; c < d; ++c) eps.at(r, c) = rng.normal();
    }
  };

  Var xc = tape.constant(x);
  Tensor keep_model({n, d}), eps({n, d});

  // State 0: mixture of the prior and the target component, all constant.
  const double a0 = alpha_at(sched, 0);
  draw_step(a0, keep_model, eps);
  Tensor z0({n, d});
  Tensor pm({n, d}), pv({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t i = r * d + c;
      pm[i] = prior.mean[c];
      pv[i] = prior.var[c];
      z0[i] = keep_model[i] != 0.0 ? pm[i] + std::sqrt(pv[i]) * eps[i] : x[i] + sd * eps[i];
    }
  }
  Tensor lq0 = infusion_log_density(z0, FactorialGaussian{pm, pv}, x, a0, sd);
  Tensor lp0 = prior_log_density(prior, z0);
  Tensor ell0({n});
  for (std::size_t r = 0; r < n; ++r) ell0[r] = lp0[r] - lq0[r];

  Var ell = tape.constant(ell0);
  Var prev = tape.constant(z0);
  const Tensor sd2 = Tensor::full({n, d}, sd * sd);

  for (int t = 1; t < T; ++t) {
    auto out = op.forward(tape, prev, t, Mode::Train, /*with_grad=*/true);
    const double a = alpha_at(sched, t);
    draw_step(a, keep_model, eps);
    // z = keep .* reparam(mean, var, eps) + (1-keep) .* (x + sd*eps)
    Tensor delta_part({n, d});
    for (std::size_t i = 0; i < n * d; ++i) {
      delta_part[i] = keep_model[i] != 0.0 ? 0.0 : x[i] + sd * eps[i];
    }
    Var z = add(mul_const(reparam(out.mean, out.var, eps), keep_model), tape.constant(delta_part));

    Var logp = gaussian_log_density(z, out.mean, out.var);
    Var logq;
    if (a == 0.0) {
      logq = logp;  // single branch; cancels exactly in value and gradient
    } else if (a == 1.0) {
      logq = gaussian_log_density(z, xc, tape.constant(sd2));
    } else {
      Var ep = gaussian_log_density_elem(z, out.mean, out.var);
      Var ed = gaussian_log_density_elem(z, xc, tape.constant(sd2));
      logq = row_sum(logaddexp(shift(ep, std::log1p(-a)), shift(ed, std::log(a))));
    }
    ell = add(ell, sub(logp, logq));
    prev = z;
  }

  auto out = op.forward(tape, prev, T, Mode::Train, /*with_grad=*/true);
  ell = add(ell, gaussian_log_density(xc, out.mean, out.var));
  return mean_all(ell);
}

namespace {

StepDiagnostics apply_update(TransitionOperator& op, const TrainConfig& cfg, Tape& tape, Var objective,
                             Optimizer& opt) {
  StepDiagnostics diag;
  diag.objective = tape.value(objective).item();
  Var loss = scale(objective, -1.0);
  tape.backward(loss);  // throws on non-finite loss
  auto params = op.parameters();
  diag.grad_norm = clip_gradient_norm(params, cfg.grad_clip);
  opt.step(cfg.eta0);
  zero_grads(params);
  return diag;
}

}  // namespace

StepDiagnostics denoising_step(TransitionOperator& op, const FactorialGaussian& prior, const TrainConfig& cfg,
                               const Tensor& batch, Rng& rng, Optimizer& opt) {
  ChainTrace trace = run_infusion_chain(rng, prior, op, cfg.schedule, batch, cfg.steps, Mode::Train);
  Tape tape;
  Var obj = denoising_objective(tape, op, trace.states, batch, cfg.steps);
  return apply_update(op, cfg, tape, obj, opt);
}

StepDiagnostics lower_bound_step(TransitionOperator& op, const FactorialGaussian& prior, const TrainConfig& cfg,
                                 const Tensor& batch, Rng& rng, Optimizer& opt) {
  Tape tape;
  Var obj = lower_bound_objective(tape, op, prior, cfg.schedule, batch, cfg.steps, rng);
  return apply_update(op, cfg, tape, obj, opt);
}

TrainResult train(TransitionOperator& op, const FactorialGaussian& prior, const Tensor& train_rows,
                  const Tensor& valid_rows, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  TrainResult result;
  result.best_val_lb = -std::numeric_limits<double>::infinity();
  if (cfg.epochs == 0) return result;
  if (train_rows.rows() == 0) throw std::invalid_argument("train: empty training split");
  if (valid_rows.rows() == 0) throw std::invalid_argument("train: empty validation split");

  const std::size_t n = train_rows.rows(), d = train_rows.cols();
  Rng root(cfg.seed);
  auto params = op.parameters();
  auto opt = make_optimizer(cfg, params);
  std::vector<Tensor> best;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    Rng epoch_rng = root.stream(stream_tag::kTrain).stream(static_cast<std::uint64_t>(epoch));
    // Fisher-Yates with the epoch stream.
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(epoch_rng.uniform() * static_cast<double>(i));
      std::swap(order[i - 1], order[j < i ? j : i - 1]);
    }

    double obj_acc = 0.0;
    std::size_t seen = 0, batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t m = std::min(cfg.batch_size, n - start);
      if (m == 1 && op.config().batch_norm) continue;  // train-mode batch norm needs n >= 2
      Tensor batch({m, d});
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < d; ++c) batch.at(r, c) = train_rows.at(order[start + r], c);
      }
      Rng batch_rng = epoch_rng.stream(batch_index++);
      StepDiagnostics diag = cfg.objective == Objective::Denoising
                                 ? denoising_step(op, prior, cfg, batch, batch_rng, *opt)
                                 : lower_bound_step(op, prior, cfg, batch, batch_rng, *opt);
      obj_acc += diag.objective * static_cast<double>(m);
      seen += m;
    }

    Rng val_rng = root.stream(stream_tag::kValidation).stream(static_cast<std::uint64_t>(epoch));
    const double val_lb = average_lower_bound(op, prior, cfg.schedule, valid_rows, cfg.val_k, val_rng, Mode::Train);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_objective = seen > 0 ? obj_acc / static_cast<double>(seen) : 0.0;
    rec.val_lower_bound = val_lb;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.push_back(rec);

    if (val_lb > result.best_val_lb) {
      result.best_val_lb = val_lb;
      result.best_epoch = epoch;
      best = snapshot(params);
    }
    if (on_epoch) on_epoch(rec, op);
  }

  if (!best.empty()) restore(params, best);
  return result;
}

void compute_norm_statistics(TransitionOperator& op, const FactorialGaussian& prior, const InfusionSchedule& sched,
                             const Tensor& train_rows, std::size_t batch_size, Rng& rng) {
  if (!op.config().batch_norm) return;
  if (train_rows.rows() < 2) throw std::invalid_argument("compute_norm_statistics: need at least 2 rows");
  op.reset_norm_stats();
  const std::size_t n = train_rows.rows(), d = train_rows.cols();
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t m = std::min(batch_size, n - start);
    if (m == 1) continue;
    Tensor batch({m, d});
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < d; ++c) batch.at(r, c) = train_rows.at(start + r, c);
    }
    ChainTrace trace = run_infusion_chain(rng, prior, op, sched, batch, op.steps(), Mode::Train);
    // The chain itself forwards steps 1..T-1; the final denoising step T
    // sees states[T-1], so run it too or its statistics stay empty.
    op.step_params(trace.states.back(), op.steps(), Mode::Train);
  }
  op.finalize_norm_stats();
}

}  // namespace infusion
