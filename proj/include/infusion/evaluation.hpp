#pragma once

#include <cstdint>
#include <span>

#include "infusion/infusion.hpp"
#include "infusion/model.hpp"

namespace infusion {

struct EvalConfig {
  int k = 20;                // proposal chains per test point
  double parzen_sigma = 0.17;
  std::size_t parzen_n_samples = 10000;
  bool parzen = true;
  bool dequantize = false;   // add U(0, 1/256) to test points for LB/IS
  int repetitions = 1;
  int sample_steps = 0;      // chain length for Parzen sample generation; 0 = op.steps()

  void validate() const;
};

/// k independent proposal chains for one test point x ([d] or [1,d]);
/// returns ell_j = log p(chain_j, x) - log q(chain_j | x) in nats.
Tensor elbo_samples(Transition& op, const FactorialGaussian& prior, const InfusionSchedule& sched, const Tensor& x,
                    int k, Rng& rng, Mode mode);

/// ell for every row of an already-sampled proposal trace (one extra
/// forward for the final denoising term; everything else is read from
/// the trace). Equals chain_log_joint(trace,...) - sum of trace logq.
Tensor elbo_from_trace(const ChainTrace& trace, Transition& op, const Tensor& x, Mode mode);

/// Mean of ell over k chains per point, averaged over all rows of x.
/// Points are replicated k times into one batch, so with batch
/// normalization in train mode the batch statistics span the whole call.
double average_lower_bound(Transition& op, const FactorialGaussian& prior, const InfusionSchedule& sched,
                           const Tensor& x, int k, Rng& rng, Mode mode);

/// Arithmetic mean of ell, computed as max + mean(ell - max) so that the
/// all-equal case returns the common value bit-exactly.
double lower_bound_estimate(std::span<const double> ell);
double lower_bound_estimate(const Tensor& ell);

/// logsumexp(ell) - log k, overflow-safe; >= lower_bound_estimate with
/// equality when all components are equal.
double is_estimate(std::span<const double> ell);
double is_estimate(const Tensor& ell);

/// log[(1/N) sum_j N(x; samples_j, sigma^2 I)] via logsumexp; x is [d].
double parzen_log_density(const Tensor& samples, const Tensor& x, double sigma);

struct EvalReport {
  double lb_mean = 0.0, lb_std = 0.0;
  double is_mean = 0.0, is_std = 0.0;
  double parzen_mean = 0.0, parzen_std = 0.0;
  bool has_parzen = false;
  int k = 0;
  int repetitions = 0;
  std::uint64_t seed = 0;
};

/// Per-point LB/IS (and optionally Parzen) estimates averaged over the
/// split, repeated cfg.repetitions times with fresh randomness; reports
/// mean and sample standard deviation over repetitions (0 when r == 1).
/// Dequantization noise applies to LB/IS test points, not to Parzen.
EvalReport evaluate_model(Transition& op, const FactorialGaussian& prior, const InfusionSchedule& sched,
                          const Tensor& split, const EvalConfig& cfg, Rng& rng, Mode mode);

/// Mean squared residual between transition means and the denoising
/// target over proposal chains on the given data; the maximum-likelihood
/// shared variance for an isotropic output head.
double fit_isotropic_variance(Transition& op, const FactorialGaussian& prior, const InfusionSchedule& sched,
                              const Tensor& x, Rng& rng, Mode mode);

}  // namespace infusion
