#include "infusion/infusion.hpp"

#include <cmath>
#include <stdexcept>

namespace infusion {

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;

double log_normal_1d(double x, double mean, double var) {
  const double diff = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - diff * diff / (2.0 * var);
}
}  // namespace

void InfusionSchedule::validate() const {
  if (!(alpha0 >= 0.0 && alpha0 <= 1.0)) throw std::invalid_argument("InfusionSchedule: alpha0 must be in [0,1]");
  if (!(omega >= 0.0)) throw std::invalid_argument("InfusionSchedule: omega must be >= 0");
  if (!(sigma_delta > 0.0)) throw std::invalid_argument("InfusionSchedule: sigma_delta must be > 0");
}

double alpha_at(const InfusionSchedule& sched, int t) {
  if (t < 0) throw std::invalid_argument("alpha_at: t must be >= 0");
  const double a = sched.alpha0 + static_cast<double>(t) * sched.omega;
  return a < 1.0 ? a : 1.0;
}

Tensor infusion_step(Rng& rng, const FactorialGaussian& op_output, const Tensor& x, double alpha,
                     double sigma_delta) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("infusion_step: alpha must be in [0,1]");
  check_same_shape(op_output.mean, x, "infusion_step");
  check_same_shape(op_output.var, x, "infusion_step");
  const std::size_t n = x.rows(), d = x.cols();
  Tensor out({n, d});
  std::vector<bool> take_target(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) take_target[c] = rng.uniform() < alpha;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t i = r * d + c;
      const double eps = rng.normal();
      out[i] = take_target[c] ? x[i] + sigma_delta * eps : op_output.mean[i] + std::sqrt(op_output.var[i]) * eps;
    }
  }
  return out;
}

Tensor infusion_log_density(const Tensor& z, const FactorialGaussian& op_output, const Tensor& x, double alpha,
                            double sigma_delta) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("infusion_log_density: alpha must be in [0,1]");
  check_same_shape(z, x, "infusion_log_density");
  check_same_shape(op_output.mean, x, "infusion_log_density");
  const std::size_t n = z.rows(), d = z.cols();
  const double sd2 = sigma_delta * sigma_delta;
  Tensor out({n});
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t i = r * d + c;
      if (alpha == 0.0) {
        acc += log_normal_1d(z[i], op_output.mean[i], op_output.var[i]);
      } else if (alpha == 1.0) {
        acc += log_normal_1d(z[i], x[i], sd2);
      } else {
        const double a = std::log1p(-alpha) + log_normal_1d(z[i], op_output.mean[i], op_output.var[i]);
        const double b = std::log(alpha) + log_normal_1d(z[i], x[i], sd2);
        const double m = a > b ? a : b;
        acc += m + std::log(std::exp(a - m) + std::exp(b - m));
      }
    }
    out[r] = acc;
  }
  return out;
}

ChainTrace run_infusion_chain(Rng& rng, const FactorialGaussian& prior, Transition& op, const InfusionSchedule& sched,
                              const Tensor& x, int T, Mode mode) {
  if (T < 1) throw std::invalid_argument("run_infusion_chain: T must be >= 1");
  sched.validate();
  const std::size_t n = x.rows(), d = x.cols();
  if (d != op.dim() || prior.mean.numel() != d) {
    throw std::invalid_argument("run_infusion_chain: dimension mismatch");
  }
  op.check_sample_steps(T);

  ChainTrace trace;
  // Broadcast the prior to per-row parameters so step 0 shares the
  // mixture code path with transition steps.
  Tensor pm({n, d}), pv({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      pm.at(r, c) = prior.mean[c];
      pv.at(r, c) = prior.var[c];
    }
  }
  const FactorialGaussian prior_rows{std::move(pm), std::move(pv)};
  const double a0 = alpha_at(sched, 0);
  Tensor z0 = infusion_step(rng, prior_rows, x, a0, sched.sigma_delta);
  trace.proposal_logq.push_back(infusion_log_density(z0, prior_rows, x, a0, sched.sigma_delta));
  trace.model_logp.push_back(prior_log_density(prior, z0));
  trace.states.push_back(std::move(z0));

  const int op_steps = op.steps();
  for (int t = 1; t < T; ++t) {
    const int t_eff = t <= op_steps ? t : op_steps;
    FactorialGaussian params = op.step_params(trace.states.back(), t_eff, mode);
    const double a = alpha_at(sched, t);
    Tensor z = infusion_step(rng, params, x, a, sched.sigma_delta);
    trace.proposal_logq.push_back(infusion_log_density(z, params, x, a, sched.sigma_delta));
    trace.model_logp.push_back(gaussian_log_density_values(z, params.mean, params.var));
    trace.states.push_back(std::move(z));
  }
  return trace;
}

}  // namespace infusion
