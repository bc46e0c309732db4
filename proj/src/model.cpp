#include "infusion/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace infusion {

void OperatorConfig::validate() const {
  if (d < 1) throw std::invalid_argument("OperatorConfig: d must be >= 1");
  if (hidden_sizes.empty()) throw std::invalid_argument("OperatorConfig: hidden_sizes must be nonempty");
  for (std::size_t h : hidden_sizes) {
    if (h < 1) throw std::invalid_argument("OperatorConfig: hidden size must be >= 1");
  }
  if (steps < 1) throw std::invalid_argument("OperatorConfig: steps must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("OperatorConfig: beta must be > 0");
  if (!(eps_var > 0.0)) throw std::invalid_argument("OperatorConfig: eps_var must be > 0");
  if (output_mode == OutputMode::Isotropic && !(fixed_var > 0.0)) {
    throw std::invalid_argument("OperatorConfig: fixed_var must be > 0 in isotropic mode");
  }
}

void Transition::check_sample_steps(int t_sample) const {
  if (t_sample < 1) throw std::invalid_argument("check_sample_steps: t_sample must be >= 1");
}

namespace {

Parameter init_dense_weight(std::size_t fan_in, std::size_t fan_out, double scale, Rng* rng, const std::string& name) {
  Tensor w({fan_in, fan_out});
  if (rng != nullptr) {
    const double lim = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = (2.0 * rng->uniform() - 1.0) * lim;
  }
  return Parameter(std::move(w), name);
}

MlpStack make_stack(const OperatorConfig& cfg, Rng* rng, const std::string& prefix) {
  MlpStack s;
  std::size_t in = cfg.d;
  for (std::size_t l = 0; l < cfg.hidden_sizes.size(); ++l) {
    const std::size_t out = cfg.hidden_sizes[l];
    const std::string nm = prefix + ".h" + std::to_string(l);
    s.hidden.push_back(DenseLayer{init_dense_weight(in, out, 1.0, rng, nm + ".w"),
                                  Parameter(Tensor::zeros({out}), nm + ".b")});
    in = out;
  }
  s.mean_head = DenseLayer{init_dense_weight(in, cfg.d, 0.1, rng, prefix + ".mean.w"),
                           Parameter(Tensor::zeros({cfg.d}), prefix + ".mean.b")};
  s.var_head = DenseLayer{init_dense_weight(in, cfg.d, 0.1, rng, prefix + ".var.w"),
                          Parameter(Tensor::zeros({cfg.d}), prefix + ".var.b")};
  return s;
}

}  // namespace

TransitionOperator::TransitionOperator(OperatorConfig cfg, Rng& rng) : TransitionOperator(std::move(cfg), true, &rng) {}

TransitionOperator TransitionOperator::make_uninitialized(OperatorConfig cfg) {
  return TransitionOperator(std::move(cfg), false, nullptr);
}

TransitionOperator::TransitionOperator(OperatorConfig cfg, bool init, Rng* rng) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::size_t n_stacks = cfg_.share_params ? 1 : static_cast<std::size_t>(cfg_.steps);
  for (std::size_t s = 0; s < n_stacks; ++s) {
    stacks_.push_back(make_stack(cfg_, init ? rng : nullptr, "stack" + std::to_string(s)));
  }
  if (cfg_.batch_norm) {
    bn_.resize(static_cast<std::size_t>(cfg_.steps));
    for (int t = 0; t < cfg_.steps; ++t) {
      for (std::size_t l = 0; l < cfg_.hidden_sizes.size(); ++l) {
        bn_[t].emplace_back(cfg_.hidden_sizes[l], "bn.t" + std::to_string(t + 1) + ".h" + std::to_string(l));
      }
    }
  }
}

TransitionOperator::TapeOutput TransitionOperator::forward(Tape& tape, Var z_prev, int t, Mode mode, bool with_grad) {
  if (t < 1 || t > cfg_.steps) {
    throw std::out_of_range("TransitionOperator::forward: step " + std::to_string(t) + " outside 1.." +
                            std::to_string(cfg_.steps));
  }
  MlpStack& stack = stacks_[cfg_.share_params ? 0 : static_cast<std::size_t>(t - 1)];
  auto use = [&](Parameter& p) { return with_grad ? tape.param(p) : tape.constant_param(p); };

  Var h = z_prev;
  for (std::size_t l = 0; l < stack.hidden.size(); ++l) {
    Var a = linear(h, use(stack.hidden[l].w), use(stack.hidden[l].b));
    if (cfg_.batch_norm) {
      a = batch_norm(a, bn_[static_cast<std::size_t>(t - 1)][l], mode, with_grad);
    }
    h = relu(a);
  }
  Var mean = sigmoid(linear(h, use(stack.mean_head.w), use(stack.mean_head.b)));
  Var var;
  if (cfg_.output_mode == OutputMode::Diagonal) {
    var = shift(scale(sigmoid(linear(h, use(stack.var_head.w), use(stack.var_head.b))), cfg_.beta), cfg_.eps_var);
  } else {
    var = tape.constant(Tensor::full(tape.value(mean).shape(), cfg_.fixed_var));
  }
  return TapeOutput{mean, var};
}

FactorialGaussian TransitionOperator::step_params(const Tensor& z_prev, int t, Mode mode) {
  Tape tape;
  Var z = tape.constant(z_prev);
  TapeOutput out = forward(tape, z, t, mode, /*with_grad=*/false);
  return FactorialGaussian{tape.value(out.mean), tape.value(out.var)};
}

void TransitionOperator::check_sample_steps(int t_sample) const {
  Transition::check_sample_steps(t_sample);
  if (t_sample > cfg_.steps && !cfg_.share_params) {
    throw std::invalid_argument("check_sample_steps: cannot sample " + std::to_string(t_sample) + " steps from a " +
                                std::to_string(cfg_.steps) + "-step operator without parameter sharing");
  }
}

std::vector<Parameter*> TransitionOperator::parameters() {
  std::vector<Parameter*> out;
  for (MlpStack& s : stacks_) {
    for (DenseLayer& l : s.hidden) {
      out.push_back(&l.w);
      out.push_back(&l.b);
    }
    out.push_back(&s.mean_head.w);
    out.push_back(&s.mean_head.b);
    out.push_back(&s.var_head.w);
    out.push_back(&s.var_head.b);
  }
  for (auto& step : bn_) {
    for (BatchNormState& b : step) {
      out.push_back(&b.gamma);
      out.push_back(&b.beta);
    }
  }
  return out;
}

void TransitionOperator::set_output_mode(OutputMode mode, double fixed_var) {
  cfg_.output_mode = mode;
  cfg_.fixed_var = fixed_var;
  cfg_.validate();
}

void TransitionOperator::reset_norm_stats() {
  for (auto& step : bn_) {
    for (BatchNormState& b : step) b.reset_stats();
  }
}

void TransitionOperator::finalize_norm_stats() {
  for (auto& step : bn_) {
    for (BatchNormState& b : step) b.finalize_stats();
  }
}

bool TransitionOperator::norm_stats_ready() const {
  for (const auto& step : bn_) {
    for (const BatchNormState& b : step) {
      if (!b.finalized) return false;
    }
  }
  return true;  // trivially ready when batch norm is off
}

FactorialGaussian fit_prior(const Tensor& train_rows, double var_floor) {
  const std::size_t n = train_rows.rows(), d = train_rows.cols();
  if (n < 2) throw std::invalid_argument("fit_prior: need at least 2 rows");
  if (!train_rows.all_finite()) throw std::invalid_argument("fit_prior: non-finite training data");
  if (!(var_floor > 0.0)) throw std::invalid_argument("fit_prior: var_floor must be > 0");
  Tensor mean({d});
  Tensor var({d});
  for (std::size_t c = 0; c < d; ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < n; ++r) m += train_rows.at(r, c);
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double diff = train_rows.at(r, c) - m;
      v += diff * diff;
    }
    v /= static_cast<double>(n);
    mean[c] = m;
    var[c] = v < var_floor ? var_floor : v;
  }
  return FactorialGaussian{std::move(mean), std::move(var)};
}

Tensor prior_log_density(const FactorialGaussian& prior, const Tensor& x) {
  const std::size_t n = x.rows(), d = x.cols();
  if (prior.mean.numel() != d) {
    throw std::invalid_argument("prior_log_density: dimension mismatch");
  }
  Tensor mean({n, d});
  Tensor var({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      mean.at(r, c) = prior.mean[c];
      var.at(r, c) = prior.var[c];
    }
  }
  return gaussian_log_density_values(x, mean, var);
}

Tensor sample_prior(Rng& rng, const FactorialGaussian& prior, std::size_t n) {
  const std::size_t d = prior.mean.numel();
  Tensor out({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      out.at(r, c) = prior.mean[c] + std::sqrt(prior.var[c]) * rng.normal();
    }
  }
  return out;
}

namespace {

Tensor gaussian_draw(Rng& rng, const FactorialGaussian& params) {
  Tensor out(params.mean.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out[i] = params.mean[i] + std::sqrt(params.var[i]) * rng.normal();
  }
  return out;
}

void clamp_rows(Tensor& states, const Tensor& observed, const std::vector<bool>& mask) {
  const std::size_t n = states.rows(), d = states.cols();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      if (mask[c]) states.at(r, c) = observed[c];
    }
  }
}

}  // namespace

ChainTrace run_model_chain(Rng& rng, const FactorialGaussian& prior, Transition& op, int t_sample, std::size_t n,
                           Mode mode) {
  op.check_sample_steps(t_sample);
  ChainTrace trace;
  Tensor z = sample_prior(rng, prior, n);
  trace.model_logp.push_back(prior_log_density(prior, z));
  trace.states.push_back(std::move(z));
  const int T = op.steps();
  for (int t = 1; t <= t_sample; ++t) {
    const int t_eff = t <= T ? t : T;  // extended sampling reuses step-T parameters
    FactorialGaussian params = op.step_params(trace.states.back(), t_eff, mode);
    Tensor next = gaussian_draw(rng, params);
    trace.model_logp.push_back(gaussian_log_density_values(next, params.mean, params.var));
    trace.states.push_back(std::move(next));
  }
  return trace;
}

Tensor chain_log_joint(const ChainTrace& trace, const FactorialGaussian& prior, Transition& op, const Tensor& x,
                       Mode mode) {
  const std::size_t S = trace.length();
  if (S == 0) throw std::invalid_argument("chain_log_joint: empty trace");
  if (!trace.model_logp.empty() && trace.model_logp.size() != S) {
    throw std::invalid_argument("chain_log_joint: trace has " + std::to_string(S) + " states but " +
                                std::to_string(trace.model_logp.size()) + " model log densities");
  }
  if (!trace.proposal_logq.empty() && trace.proposal_logq.size() != S) {
    throw std::invalid_argument("chain_log_joint: trace has " + std::to_string(S) + " states but " +
                                std::to_string(trace.proposal_logq.size()) + " proposal log densities");
  }
  const std::size_t n = x.rows();
  if (trace.rows() != n || x.cols() != op.dim()) {
    throw std::invalid_argument("chain_log_joint: x shape " + x.shape_str() + " does not match trace");
  }
  op.check_sample_steps(static_cast<int>(S));
  const int T = op.steps();
  Tensor total = prior_log_density(prior, trace.states[0]);
  for (std::size_t t = 1; t < S; ++t) {
    const int t_eff = static_cast<int>(t) <= T ? static_cast<int>(t) : T;
    FactorialGaussian params = op.step_params(trace.states[t - 1], t_eff, mode);
    Tensor lp = gaussian_log_density_values(trace.states[t], params.mean, params.var);
    for (std::size_t r = 0; r < n; ++r) total[r] += lp[r];
  }
  const int t_final = static_cast<int>(S) <= T ? static_cast<int>(S) : T;
  FactorialGaussian params = op.step_params(trace.states[S - 1], t_final, mode);
  Tensor lp = gaussian_log_density_values(x, params.mean, params.var);
  for (std::size_t r = 0; r < n; ++r) total[r] += lp[r];
  return total;
}

ChainTrace run_clamped_chain(Rng& rng, const FactorialGaussian& prior, Transition& op, const Tensor& observed,
                             const std::vector<bool>& mask, int t_sample, std::size_t n_restarts, Mode mode) {
  if (observed.numel() != op.dim() || mask.size() != op.dim()) {
    throw std::invalid_argument("run_clamped_chain: observed/mask size must equal the data dimension");
  }
  bool any = false;
  for (bool m : mask) any = any || m;
  if (!any) {
    throw std::invalid_argument("run_clamped_chain: mask selects no dimensions; use run_model_chain");
  }
  op.check_sample_steps(t_sample);
  ChainTrace trace;
  Tensor z = sample_prior(rng, prior, n_restarts);
  clamp_rows(z, observed, mask);
  trace.model_logp.push_back(prior_log_density(prior, z));
  trace.states.push_back(std::move(z));
  const int T = op.steps();
  for (int t = 1; t <= t_sample; ++t) {
    const int t_eff = t <= T ? t : T;
    FactorialGaussian params = op.step_params(trace.states.back(), t_eff, mode);
    Tensor next = gaussian_draw(rng, params);
    clamp_rows(next, observed, mask);
    trace.model_logp.push_back(gaussian_log_density_values(next, params.mean, params.var));
    trace.states.push_back(std::move(next));
  }
  return trace;
}

}  // namespace infusion
