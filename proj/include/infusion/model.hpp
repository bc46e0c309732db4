#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "infusion/rng.hpp"
#include "infusion/tape.hpp"
#include "infusion/tensor.hpp"

namespace infusion {

/// Product of independent per-dimension Gaussians. Used both for the
/// prior (mean/var are [d] vectors) and for per-row transition outputs
/// (mean/var are [n,d] matrices).
struct FactorialGaussian {
  Tensor mean;
  Tensor var;
};

enum class OutputMode { Diagonal, Isotropic };

struct OperatorConfig {
  std::size_t d = 2;
  std::vector<std::size_t> hidden_sizes{1200, 1200};
  int steps = 15;  // T
  bool share_params = true;
  double beta = 0.1;      // variance scale
  double eps_var = 1e-4;  // variance floor added to the scaled sigmoid
  OutputMode output_mode = OutputMode::Diagonal;
  double fixed_var = 0.05;  // isotropic mode only
  bool batch_norm = false;

  void validate() const;  // throws std::invalid_argument
};

/// Anything that maps a batch of previous states to per-row Gaussian
/// transition parameters. The MLP operator implements this; tests also
/// plug in analytic transitions.
class Transition {
 public:
  virtual ~Transition() = default;
  virtual std::size_t dim() const = 0;
  virtual int steps() const = 0;
  virtual FactorialGaussian step_params(const Tensor& z_prev, int t, Mode mode) = 0;
  /// Throws if sampling t_sample steps is not supported (for example,
  /// per-step parameters without sharing cannot extend past T).
  virtual void check_sample_steps(int t_sample) const;
};

struct DenseLayer {
  Parameter w;
  Parameter b;
};

struct MlpStack {
  std::vector<DenseLayer> hidden;
  DenseLayer mean_head;
  DenseLayer var_head;
};

/// The learned transition operator: an MLP trunk with two sigmoid output
/// heads. mean = sigmoid(mean_head); var = beta*sigmoid(var_head)+eps_var
/// in diagonal mode, or a single fixed variance in isotropic mode.
/// Per-step batch-norm parameters and statistics are never shared across
/// steps; trunk/head weights are shared when config.share_params.
class TransitionOperator : public Transition {
 public:
  /// Random initialization: trunk uniform +-sqrt(6/(fan_in+fan_out)),
  /// heads at a tenth of that so initial means start near 0.5.
  TransitionOperator(OperatorConfig cfg, Rng& rng);
  /// Zero-initialized weights; used by the checkpoint loader.
  static TransitionOperator make_uninitialized(OperatorConfig cfg);

  const OperatorConfig& config() const { return cfg_; }
  std::size_t dim() const override { return cfg_.d; }
  int steps() const override { return cfg_.steps; }

  struct TapeOutput {
    Var mean;
    Var var;
  };
  /// Records the step-t forward pass on the tape. 1 <= t <= steps().
  TapeOutput forward(Tape& tape, Var z_prev, int t, Mode mode, bool with_grad = true);

  FactorialGaussian step_params(const Tensor& z_prev, int t, Mode mode) override;
  void check_sample_steps(int t_sample) const override;

  /// All trainable parameters (trunk, heads, batch-norm scale/shift),
  /// in a fixed deterministic order.
  std::vector<Parameter*> parameters();

  void set_output_mode(OutputMode mode, double fixed_var);

  // Batch-norm statistics protocol: reset, run train-mode forwards over
  // the training set, then finalize. Eval mode requires finalized stats.
  void reset_norm_stats();
  void finalize_norm_stats();
  bool norm_stats_ready() const;

  // Checkpoint access.
  std::vector<MlpStack>& stacks() { return stacks_; }
  const std::vector<MlpStack>& stacks() const { return stacks_; }
  std::vector<std::vector<BatchNormState>>& norm_states() { return bn_; }
  const std::vector<std::vector<BatchNormState>>& norm_states() const { return bn_; }

 private:
  TransitionOperator(OperatorConfig cfg, bool init, Rng* rng);

  OperatorConfig cfg_;
  std::vector<MlpStack> stacks_;                 // one if share_params, else one per step
  std::vector<std::vector<BatchNormState>> bn_;  // [step-1][hidden layer], when enabled
};

/// Ordered chain states plus per-step log densities. states[t] is the
/// [n,d] batch of chain states at step t; model_logp[t] row r holds
/// log p(t)(z_t,r | z_{t-1},r) (t=0: the prior log density). Infusion
/// chains additionally carry proposal_logq with the same layout.
struct ChainTrace {
  std::vector<Tensor> states;
  std::vector<Tensor> model_logp;
  std::vector<Tensor> proposal_logq;

  std::size_t length() const { return states.size(); }
  std::size_t rows() const { return states.empty() ? 0 : states[0].rows(); }
};

/// Per-dimension maximum-likelihood Gaussian fit (divisor n), variances
/// clamped up to var_floor. Requires n >= 2 finite rows.
FactorialGaussian fit_prior(const Tensor& train_rows, double var_floor = 1e-6);

/// log p0(x) for each row of x under a [d]-shaped prior.
Tensor prior_log_density(const FactorialGaussian& prior, const Tensor& x);

/// n i.i.d. draws from the prior, row-major normal consumption.
Tensor sample_prior(Rng& rng, const FactorialGaussian& prior, std::size_t n);

/// Runs n chains of the generative model for t_sample steps. Steps past
/// op.steps() reuse the step-T parameters and normalization statistics.
ChainTrace run_model_chain(Rng& rng, const FactorialGaussian& prior, Transition& op, int t_sample, std::size_t n,
                           Mode mode);

/// log p(z_0) + sum_{t=1}^{S-1} log p(z_t|z_{t-1}) + log p(x|z_{S-1})
/// for each row, recomputed from the trace states (S = trace length).
Tensor chain_log_joint(const ChainTrace& trace, const FactorialGaussian& prior, Transition& op, const Tensor& x,
                       Mode mode);

/// Model chain with observed dimensions clamped to `observed` after every
/// sampling step, including the initial draw. mask[i] true = clamped.
ChainTrace run_clamped_chain(Rng& rng, const FactorialGaussian& prior, Transition& op, const Tensor& observed,
                             const std::vector<bool>& mask, int t_sample, std::size_t n_restarts, Mode mode);

}  // namespace infusion
