#pragma once

#include "infusion/model.hpp"
#include "infusion/rng.hpp"
#include "infusion/tensor.hpp"

namespace infusion {

/// Linear infusion-rate schedule alpha(t) = min(1, alpha0 + t*omega),
/// plus the width of the target-centered mixture component.
struct InfusionSchedule {
  double alpha0 = 0.0;
  double omega = 0.01;
  double sigma_delta = 0.03;  // std of the component around the target

  void validate() const;  // throws std::invalid_argument
};

/// min(1, alpha0 + t*omega) for t >= 0.
double alpha_at(const InfusionSchedule& sched, int t);

/// One proposal step for a batch: per row and per dimension, with
/// probability alpha draw from N(x_i, sigma_delta^2), otherwise from the
/// transition output N(mean_i, var_i).
///
/// rng consumption contract, per row: d branch uniforms first, then d
/// normals (the same normal serves whichever branch was selected), so
/// consumption does not depend on the branch pattern or on parameters.
Tensor infusion_step(Rng& rng, const FactorialGaussian& op_output, const Tensor& x, double alpha, double sigma_delta);

/// Per-row log density of the mixture proposal at z:
/// sum_i log[(1-alpha) N(z_i; mean_i, var_i) + alpha N(z_i; x_i, sd^2)],
/// each term via a two-term log-sum-exp; alpha in {0,1} short-circuits
/// to the single branch exactly.
Tensor infusion_log_density(const Tensor& z, const FactorialGaussian& op_output, const Tensor& x, double alpha,
                            double sigma_delta);

/// Samples T proposal states for each target row of x. states[0] mixes
/// the prior with the target component at alpha(0); states[t] mixes the
/// transition applied to states[t-1] at alpha(t). The trace stores both
/// per-step proposal log densities and per-step model log densities.
ChainTrace run_infusion_chain(Rng& rng, const FactorialGaussian& prior, Transition& op, const InfusionSchedule& sched,
                              const Tensor& x, int T, Mode mode);

}  // namespace infusion
