#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "infusion/evaluation.hpp"
#include "infusion/infusion.hpp"
#include "infusion/model.hpp"

namespace infusion {

enum class OptimizerKind { Adam, Sgd };
enum class Objective { Denoising, LowerBound };

struct TrainConfig {
  int steps = 15;  // T
  InfusionSchedule schedule{};
  double eta0 = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 64;
  int epochs = 100;
  Objective objective = Objective::Denoising;
  std::uint64_t seed = 0;
  double grad_clip = 100.0;  // <= 0 disables
  int val_k = 20;            // proposal chains per validation point

  void validate() const;
};

/// Per-step learning rate eta0 * t / T; throws unless 1 <= t <= T.
double eta_at(const TrainConfig& cfg, int t);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update from the current parameter gradients.
  virtual void step(double lr) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg, std::vector<Parameter*> params);

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the pre-clip norm.
double clip_gradient_norm(const std::vector<Parameter*>& params, double max_norm);

/// Weighted denoising objective on the tape: for frozen proposal states,
/// sum_t (t/T) * mean_rows log p(t)(x | state[t-1]). Gradients do not
/// reach the states (they enter as constants).
Var denoising_objective(Tape& tape, TransitionOperator& op, const std::vector<Tensor>& states, const Tensor& x, int T);

/// Stochastic lower-bound objective on the tape: samples a proposal
/// chain whose model-branch draws are reparameterized so gradients flow
/// through the chain; target-branch draws and branch selections are
/// constants. Returns mean_rows [log p(chain, x) - log q(chain | x)].
/// Consumes rng exactly as run_infusion_chain does.
Var lower_bound_objective(Tape& tape, TransitionOperator& op, const FactorialGaussian& prior,
                          const InfusionSchedule& sched, const Tensor& x, int T, Rng& rng);

struct StepDiagnostics {
  double objective = 0.0;  // value being maximized, before the update
  double grad_norm = 0.0;
};

/// One infusion-training step on a mini-batch: sample proposal chains,
/// one optimizer update on the weighted denoising objective.
StepDiagnostics denoising_step(TransitionOperator& op, const FactorialGaussian& prior, const TrainConfig& cfg,
                               const Tensor& batch, Rng& rng, Optimizer& opt);

/// One optimizer update on the reparameterized lower-bound objective.
StepDiagnostics lower_bound_step(TransitionOperator& op, const FactorialGaussian& prior, const TrainConfig& cfg,
                                 const Tensor& batch, Rng& rng, Optimizer& opt);

struct EpochRecord {
  int epoch = 0;
  double train_objective = 0.0;
  double val_lower_bound = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_val_lb = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&, TransitionOperator&)>;

/// Epoch loop over the shuffled training split; after each epoch the
/// stochastic lower bound is evaluated on the validation split and the
/// best-validation parameters are retained (the operator holds them when
/// this returns). Fully reproducible for a fixed cfg.seed.
TrainResult train(TransitionOperator& op, const FactorialGaussian& prior, const Tensor& train_rows,
                  const Tensor& valid_rows, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Recomputes batch-norm evaluation statistics over the full training
/// set (proposal-chain forwards, train-mode batches), then finalizes
/// them. No-op for operators without batch norm.
void compute_norm_statistics(TransitionOperator& op, const FactorialGaussian& prior, const InfusionSchedule& sched,
                             const Tensor& train_rows, std::size_t batch_size, Rng& rng);

}  // namespace infusion
