#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "infusion/model.hpp"
#include "infusion/tape.hpp"

namespace test_util {

using infusion::FactorialGaussian;
using infusion::Mode;
using infusion::Parameter;
using infusion::Tensor;

/// Central finite differences over every element of every parameter,
/// compared against the gradients already accumulated in param.grad.
/// Error metric: |fd - grad| / max(floor, |fd|, |grad|).
inline double max_fd_rel_err(const std::vector<Parameter*>& params, const std::function<double()>& eval_loss,
                             double h = 1e-5, double floor = 1e-2) {
  double worst = 0.0;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + h;
      const double lp = eval_loss();
      p->value[i] = keep - h;
      const double lm = eval_loss();
      p->value[i] = keep;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = p->grad[i];
      double denom = floor;
      if (std::fabs(fd) > denom) denom = std::fabs(fd);
      if (std::fabs(an) > denom) denom = std::fabs(an);
      const double err = std::fabs(fd - an) / denom;
      if (err > worst) worst = err;
    }
  }
  return worst;
}

/// Fixed linear-Gaussian transition: mean = a*z + b, constant variance.
/// Chains composed of these have closed-form marginals.
class LinearGaussianTransition : public infusion::Transition {
 public:
  LinearGaussianTransition(std::size_t d, int steps, double a, double b, double var)
      : d_(d), steps_(steps), a_(a), b_(b), var_(var) {}

  std::size_t dim() const override { return d_; }
  int steps() const override { return steps_; }

  FactorialGaussian step_params(const Tensor& z_prev, int, Mode) override {
    Tensor mean(z_prev.shape());
    Tensor var(z_prev.shape());
    for (std::size_t i = 0; i < z_prev.numel(); ++i) {
      mean[i] = a_ * z_prev[i] + b_;
      var[i] = var_;
    }
    return FactorialGaussian{std::move(mean), std::move(var)};
  }

  /// Marginal of z_T for a chain started at N(m0, v0): T affine-Gaussian
  /// hops compose to another Gaussian.
  void marginal(double m0, double v0, int hops, double& mean, double& var) const {
    mean = m0;
    var = v0;
    for (int t = 0; t < hops; ++t) {
      mean = a_ * mean + b_;
      var = a_ * a_ * var + var_;
    }
  }

 private:
  std::size_t d_;
  int steps_;
  double a_, b_, var_;
};

/// Transition that ignores its input entirely.
class ConstantTransition : public infusion::Transition {
 public:
  ConstantTransition(std::size_t d, int steps, double mean, double var)
      : d_(d), steps_(steps), mean_(mean), var_(var) {}
  std::size_t dim() const override { return d_; }
  int steps() const override { return steps_; }
  FactorialGaussian step_params(const Tensor& z_prev, int, Mode) override {
    return FactorialGaussian{Tensor::full(z_prev.shape(), mean_), Tensor::full(z_prev.shape(), var_)};
  }

 private:
  std::size_t d_;
  int steps_;
  double mean_, var_;
};

inline double l2_distance_row(const Tensor& states, std::size_t row, const Tensor& x, std::size_t x_row) {
  double acc = 0.0;
  for (std::size_t c = 0; c < states.cols(); ++c) {
    const double diff = states.at(row, c) - x.at(x_row, c);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

}  // namespace test_util
