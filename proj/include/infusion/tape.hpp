#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "infusion/rng.hpp"
#include "infusion/tensor.hpp"

namespace infusion {

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t index = static_cast<std::size_t>(-1);
};

/// Trainable tensor with a persistent gradient accumulator. Gradients
/// from successive backward() calls add up until zero_grad().
struct Parameter {
  Tensor value;
  Tensor grad;
  std::string name;

  Parameter() = default;
  explicit Parameter(Tensor v, std::string n = {})
      : value(std::move(v)), grad(Tensor::zeros(value.shape())), name(std::move(n)) {}

  void zero_grad() { grad.fill(0.0); }
};

enum class Mode { Train, Eval };

/// Per-step batch-normalization state for one normalized width: learned
/// scale/shift plus statistics accumulated from train-mode batches.
/// Eval mode requires finalize_stats() to have been called after the
/// statistics pass over the training set.
struct BatchNormState {
  Parameter gamma;
  Parameter beta;
  Tensor stat_mean_sum;  // running sums of per-batch means/vars
  Tensor stat_var_sum;
  std::size_t stat_batches = 0;
  Tensor eval_mean;
  Tensor eval_var;
  bool finalized = false;

  explicit BatchNormState(std::size_t width, std::string name = {});
  void reset_stats();
  void finalize_stats();  // eval statistics <- average of accumulated batch statistics
};

/// Record of primitive operations in topological (creation) order.
/// backward() replays the record in reverse, visiting each node once,
/// and accumulates leaf gradients into their bound Parameters.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor v);
  /// Leaf tracked for gradients; backward() adds into p.grad.
  Var param(Parameter& p);
  /// Parameter value used as a plain constant (no gradient tracking).
  Var constant_param(const Parameter& p);

  const Tensor& value(Var v) const { return value_at(v.index); }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse-mode sweep from a scalar loss. Throws if the loss is not a
  /// single-element tensor or is non-finite.
  void backward(Var scalar_loss);

  /// Smallest |input| seen by any relu recorded on this tape. Gradient
  /// checks use it to stay away from the kink.
  double min_abs_relu_input() const { return min_abs_relu_input_; }

  // Surface for the primitive-op implementations.
  Var push(Tensor value, bool needs_grad);
  bool needs_grad(Var v) const { return nodes_[v.index].needs_grad; }
  const Tensor& value_at(std::size_t i) const { return nodes_[i].value; }
  Tensor& grad_at(std::size_t i) { return nodes_[i].grad; }
  void set_backprop(std::size_t i, std::function<void(Tape&)> fn) { nodes_[i].backprop = std::move(fn); }
  void note_relu_input(const Tensor& x);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> backprop;  // empty for leaves
    Parameter* bound = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  double min_abs_relu_input_ = 1e300;
};

// --- primitive ops -------------------------------------------------------
// All binary ops require both operands on the same tape.

/// Affine map: x [n,din] @ w [din,dout] + b [dout] broadcast over rows.
Var linear(Var x, Var w, Var b);
Var relu(Var x);
/// Numerically stable logistic, elementwise.
Var sigmoid(Var x);
/// Train mode normalizes by the current batch statistics (variance floor
/// 1e-8) and accumulates them into bn; eval mode uses bn's finalized
/// statistics. Train mode requires n >= 2 rows.
Var batch_norm(Var x, BatchNormState& bn, Mode mode, bool with_grad = true);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var mul_const(Var a, const Tensor& m);
Var scale(Var a, double c);
Var shift(Var a, double c);
/// Per-row diagonal-Gaussian log density: [n,d],[n,d],[n,d] -> [n].
/// Requires var > 0 elementwise.
Var gaussian_log_density(Var x, Var mean, Var var);
/// Elementwise log density terms, not summed over dimensions.
Var gaussian_log_density_elem(Var x, Var mean, Var var);
/// Elementwise log(exp(a) + exp(b)), overflow-safe.
Var logaddexp(Var a, Var b);
Var row_sum(Var x);
Var sum(Var x);
Var mean_all(Var x);
/// mean + sqrt(var) * eps with eps fixed; gradients flow through mean
/// and var only. Requires var > 0.
Var reparam(Var mean, Var var, const Tensor& eps);
/// Convenience: draws eps from rng (one normal per element, row-major).
Var reparam_sample(Rng& rng, Var mean, Var var);

// --- plain-tensor counterparts used by samplers (no tape, no gradients) ---

Tensor gaussian_log_density_values(const Tensor& x, const Tensor& mean, const Tensor& var);
Tensor sigmoid_values(const Tensor& x);
/// Fills a tensor with one standard normal per element, row-major order.
Tensor normal_draws(Rng& rng, const std::vector<std::size_t>& shape);

}  // namespace infusion
