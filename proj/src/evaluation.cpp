#include "infusion/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace infusion {

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;

Tensor as_row_matrix(const Tensor& x) {
  if (x.ndim() == 1) return Tensor::from({1, x.numel()}, std::vector<double>(x.data(), x.data() + x.numel()));
  if (x.ndim() == 2 && x.rows() == 1) return x;
  throw std::invalid_argument("expected a single point ([d] or [1,d]), got shape " + x.shape_str());
}

Tensor repeat_rows(const Tensor& x, std::size_t k) {
  const std::size_t n = x.rows(), d = x.cols();
  Tensor out({n * k, d});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t c = 0; c < d; ++c) out.at(r * k + j, c) = x.at(r, c);
    }
  }
  return out;
}
}  // namespace

void EvalConfig::validate() const {
  if (k < 1) throw std::invalid_argument("EvalConfig: k must be >= 1");
  if (!(parzen_sigma > 0.0)) throw std::invalid_argument("EvalConfig: parzen_sigma must be > 0");
  if (parzen && parzen_n_samples < 1) throw std::invalid_argument("EvalConfig: parzen_n_samples must be >= 1");
  if (repetitions < 1) throw std::invalid_argument("EvalConfig: repetitions must be >= 1");
  if (sample_steps < 0) throw std::invalid_argument("EvalConfig: sample_steps must be >= 0");
}

Tensor elbo_from_trace(const ChainTrace& trace, Transition& op, const Tensor& x, Mode mode) {
  const std::size_t S = trace.length();
  if (S == 0 || trace.proposal_logq.size() != S || trace.model_logp.size() != S) {
    throw std::invalid_argument("elbo_from_trace: trace is not a complete proposal trace");
  }
  const std::size_t n = trace.rows();
  if (x.rows() != n) throw std::invalid_argument("elbo_from_trace: x row count does not match trace");
  const int T = op.steps();
  const int t_final = static_cast<int>(S) <= T ? static_cast<int>(S) : T;
  FactorialGaussian params = op.step_params(trace.states[S - 1], t_final, mode);
  Tensor ell = gaussian_log_density_values(x, params.mean, params.var);
  for (std::size_t t = 0; t < S; ++t) {
    for (std::size_t r = 0; r < n; ++r) ell[r] += trace.model_logp[t][r] - trace.proposal_logq[t][r];
  }
  return ell;
}

Tensor elbo_samples(Transition& op, const FactorialGaussian& prior, const InfusionSchedule& sched, const Tensor& x,
                    int k, Rng& rng, Mode mode) {
  if (k < 1) throw std::invalid_argument("elbo_samples: k must be >= 1");
  const Tensor row = as_row_matrix(x);
  const Tensor rep = repeat_rows(row, static_cast<std::size_t>(k));
  ChainTrace trace = run_infusion_chain(rng, prior, op, sched, rep, op.steps(), mode);
  return elbo_from_trace(trace, op, rep, mode);
}

double average_lower_bound(Transition& op, const FactorialGaussian& prior, const InfusionSchedule& sched,
                           const Tensor& x, int k, Rng& rng, Mode mode) {
  if (x.rows() == 0) throw std::invalid_argument("average_lower_bound: empty split");
  const Tensor rep = repeat_rows(x, static_cast<std::size_t>(k));
  ChainTrace trace = run_infusion_chain(rng, prior, op, sched, rep, op.steps(), mode);
  Tensor ell = elbo_from_trace(trace, op, rep, mode);
  double acc = 0.0;
  for (std::size_t i = 0; i < ell.numel(); ++i) acc += ell[i];
  return acc / static_cast<double>(ell.numel());
}

double lower_bound_estimate(std::span<const double> ell) {
  if (ell.empty()) throw std::invalid_argument("lower_bound_estimate: empty vector");
  const double m = *std::max_element(ell.begin(), ell.end());
  double acc = 0.0;
  for (double v : ell) acc += v - m;
  return m + acc / static_cast<double>(ell.size());
}

double is_estimate(std::span<const double> ell) {
  if (ell.empty()) throw std::invalid_argument("is_estimate: empty vector");
  const double m = *std::max_element(ell.begin(), ell.end());
  double acc = 0.0;
  for (double v : ell) acc += std::exp(v - m);
  return m + std::log(acc / static_cast<double>(ell.size()));
}

double lower_bound_estimate(const Tensor& ell) {
  return lower_bound_estimate(std::span<const double>(ell.data(), ell.numel()));
}

double is_estimate(const Tensor& ell) { return is_estimate(std::span<const double>(ell.data(), ell.numel())); }

double parzen_log_density(const Tensor& samples, const Tensor& x, double sigma) {
  if (samples.rows() == 0) throw std::invalid_argument("parzen_log_density: empty sample set");
  if (!(sigma > 0.0)) throw std::invalid_argument("parzen_log_density: sigma must be > 0");
  const std::size_t n = samples.rows(), d = samples.cols();
  if (x.numel() != d) throw std::invalid_argument("parzen_log_density: dimension mismatch");
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const double log_norm = -0.5 * static_cast<double>(d) * (kLogTwoPi + 2.0 * std::log(sigma));
  // One pass for the max exponent, one for the shifted sum.
  std::vector<double> expo(n);
  double m = -1e300;
  for (std::size_t r = 0; r < n; ++r) {
    double sq = 0.0;
    const double* srow = samples.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = x[c] - srow[c];
      sq += diff * diff;
    }
    expo[r] = -sq * inv2s2;
    if (expo[r] > m) m = expo[r];
  }
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) acc += std::exp(expo[r] - m);
  return log_norm + m + std::log(acc) - std::log(static_cast<double>(n));
}

namespace {

Tensor generate_samples(Transition& op, const FactorialGaussian& prior, std::size_t n, int t_sample, Rng& rng,
                        Mode mode) {
  const std::size_t d = op.dim();
  Tensor out({n, d});
  const std::size_t chunk = 512;  // bound transient tape memory
  std::size_t done = 0;
  while (done < n) {
    const std::size_t take = std::min(chunk, n - done);
    ChainTrace trace = run_model_chain(rng, prior, op, t_sample, take, mode);
    const Tensor& last = trace.states.back();
    for (std::size_t r = 0; r < take; ++r) {
      for (std::size_t c = 0; c < d; ++c) out.at(done + r, c) = last.at(r, c);
    }
    done += take;
  }
  return out;
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = 0.0;
  for (double v : xs) m += v;
  m /= static_cast<double>(xs.size());
  double acc = 0.0;
  for (double v : xs) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double mean_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (double v : xs) m += v;
  return m / static_cast<double>(xs.size());
}

}  // namespace

EvalReport evaluate_model(Transition& op, const FactorialGaussian& prior, const InfusionSchedule& sched,
                          const Tensor& split, const EvalConfig& cfg, Rng& rng, Mode mode) {
  cfg.validate();
  if (split.rows() == 0) throw std::invalid_argument("evaluate_model: empty split");
  const std::size_t n = split.rows(), d = split.cols();
  const int t_sample = cfg.sample_steps > 0 ? cfg.sample_steps : op.steps();

  std::vector<double> lb_reps, is_reps, parzen_reps;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    Rng rep_rng = rng.stream(static_cast<std::uint64_t>(rep));
    Rng deq_rng = rep_rng.stream(0);
    Rng chain_rng = rep_rng.stream(1);
    Rng parzen_rng = rep_rng.stream(2);

    Tensor points = split;
    if (cfg.dequantize) {
      for (std::size_t i = 0; i < points.numel(); ++i) points[i] += deq_rng.uniform() / 256.0;
    }

    double lb_acc = 0.0, is_acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      Tensor x = Tensor::from({d}, points.row(r));
      Tensor ell = elbo_samples(op, prior, sched, x, cfg.k, chain_rng, mode);
      lb_acc += lower_bound_estimate(ell);
      is_acc += is_estimate(ell);
    }
    lb_reps.push_back(lb_acc / static_cast<double>(n));
    is_reps.push_back(is_acc / static_cast<double>(n));

    if (cfg.parzen) {
      Tensor samples = generate_samples(op, prior, cfg.parzen_n_samples, t_sample, parzen_rng, mode);
      double p_acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        Tensor x = Tensor::from({d}, split.row(r));
        p_acc += parzen_log_density(samples, x, cfg.parzen_sigma);
      }
      parzen_reps.push_back(p_acc / static_cast<double>(n));
    }
  }

  EvalReport report;
  report.lb_mean = mean_of(lb_reps);
  report.lb_std = sample_std(lb_reps);
  report.is_mean = mean_of(is_reps);
  report.is_std = sample_std(is_reps);
  report.has_parzen = cfg.parzen;
  if (cfg.parzen) {
    report.parzen_mean = mean_of(parzen_reps);
    report.parzen_std = sample_std(parzen_reps);
  }
  report.k = cfg.k;
  report.repetitions = cfg.repetitions;
  report.seed = rng.seed();
  return report;
}

double fit_isotropic_variance(Transition& op, const FactorialGaussian& prior, const InfusionSchedule& sched,
                              const Tensor& x, Rng& rng, Mode mode) {
  if (x.rows() == 0) throw std::invalid_argument("fit_isotropic_variance: empty data");
  const int T = op.steps();
  ChainTrace trace = run_infusion_chain(rng, prior, op, sched, x, T, mode);
  const std::size_t n = x.rows(), d = x.cols();
  double acc = 0.0;
  std::size_t count = 0;
  for (int t = 1; t <= T; ++t) {
    FactorialGaussian params = op.step_params(trace.states[static_cast<std::size_t>(t - 1)], t, mode);
    for (std::size_t i = 0; i < n * d; ++i) {
      const double diff = x[i] - params.mean[i];
      acc += diff * diff;
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

}  // namespace infusion
