#include "infusion/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace infusion {

namespace {

constexpr double kBnVarianceFloor = 1e-8;
constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)

void check_same_tape(Var a, Var b, const char* what) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw std::invalid_argument(std::string(what) + ": operands on different tapes");
  }
}

void check_positive_var(const Tensor& var, const char* what) {
  for (std::size_t i = 0; i < var.numel(); ++i) {
    if (!(var[i] > 0.0)) throw std::domain_error(std::string(what) + ": nonpositive variance");
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

BatchNormState::BatchNormState(std::size_t width, std::string name)
    : gamma(Tensor::full({width}, 1.0), name + ".gamma"),
      beta(Tensor::zeros({width}), name + ".beta"),
      stat_mean_sum(Tensor::zeros({width})),
      stat_var_sum(Tensor::zeros({width})),
      eval_mean(Tensor::zeros({width})),
      eval_var(Tensor::full({width}, 1.0)) {}

void BatchNormState::reset_stats() {
  stat_mean_sum.fill(0.0);
  stat_var_sum.fill(0.0);
  stat_batches = 0;
  finalized = false;
}

void BatchNormState::finalize_stats() {
  if (stat_batches == 0) {
    throw std::logic_error("BatchNormState::finalize_stats: no batches accumulated");
  }
  const double inv = 1.0 / static_cast<double>(stat_batches);
  for (std::size_t i = 0; i < eval_mean.numel(); ++i) {
    eval_mean[i] = stat_mean_sum[i] * inv;
    eval_var[i] = stat_var_sum[i] * inv;
  }
  finalized = true;
}

Var Tape::push(Tensor value, bool needs) {
  Node node;
  node.value = std::move(value);
  node.grad = Tensor::zeros(node.value.shape());
  node.needs_grad = needs;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor v) { return push(std::move(v), false); }

Var Tape::param(Parameter& p) {
  Var v = push(p.value, true);
  nodes_[v.index].bound = &p;
  return v;
}

Var Tape::constant_param(const Parameter& p) { return push(p.value, false); }

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("Tape::backward: loss from another tape");
  const Tensor& lv = nodes_[loss.index].value;
  if (lv.numel() != 1) {
    throw std::invalid_argument("Tape::backward: loss is not a scalar (numel=" + std::to_string(lv.numel()) + ")");
  }
  if (!std::isfinite(lv[0])) throw std::runtime_error("Tape::backward: non-finite loss");
  for (Node& n : nodes_) n.grad.fill(0.0);
  nodes_[loss.index].grad[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.backprop) n.backprop(*this);
  }
  for (Node& n : nodes_) {
    if (n.bound != nullptr) {
      for (std::size_t i = 0; i < n.grad.numel(); ++i) n.bound->grad[i] += n.grad[i];
    }
  }
}

void Tape::note_relu_input(const Tensor& x) {
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double a = std::fabs(x[i]);
    if (a < min_abs_relu_input_) min_abs_relu_input_ = a;
  }
}

Var linear(Var x, Var w, Var b) {
  check_same_tape(x, w, "linear");
  check_same_tape(x, b, "linear");
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  const Tensor& bv = t.value(b);
  const std::size_t n = xv.rows(), din = xv.cols();
  if (wv.rows() != din || bv.numel() != wv.cols()) {
    throw std::invalid_argument("linear: shape mismatch " + xv.shape_str() + " @ " + wv.shape_str() + " + " +
                                bv.shape_str());
  }
  const std::size_t dout = wv.cols();
  Tensor out({n, dout});
  for (std::size_t r = 0; r < n; ++r) {
    double* orow = out.data() + r * dout;
    for (std::size_t c = 0; c < dout; ++c) orow[c] = bv[c];
    const double* xrow = xv.data() + r * din;
    for (std::size_t k = 0; k < din; ++k) {
      const double xk = xrow[k];
      const double* wrow = wv.data() + k * dout;
      for (std::size_t c = 0; c < dout; ++c) orow[c] += xk * wrow[c];
    }
  }
  const bool needs = t.needs_grad(x) || t.needs_grad(w) || t.needs_grad(b);
  Var o = t.push(std::move(out), needs);
  const std::size_t xi = x.index, wi = w.index, bi = b.index, oi = o.index;
  if (needs) {
    t.set_backprop(oi, [xi, wi, bi, oi, n, din, dout](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      const Tensor& xin = tp.value_at(xi);
      const Tensor& win = tp.value_at(wi);
      Tensor& gx = tp.grad_at(xi);
      Tensor& gw = tp.grad_at(wi);
      Tensor& gb = tp.grad_at(bi);
      for (std::size_t r = 0; r < n; ++r) {
        const double* grow = g.data() + r * dout;
        const double* xrow = xin.data() + r * din;
        double* gxrow = gx.data() + r * din;
        for (std::size_t k = 0; k < din; ++k) {
          const double* wrow = win.data() + k * dout;
          double* gwrow = gw.data() + k * dout;
          double acc = 0.0;
          const double xk = xrow[k];
          for (std::size_t c = 0; c < dout; ++c) {
            acc += grow[c] * wrow[c];
            gwrow[c] += xk * grow[c];
          }
          gxrow[k] += acc;
        }
        for (std::size_t c = 0; c < dout; ++c) gb[c] += grow[c];
      }
    });
  }
  return o;
}

Var relu(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  t.note_relu_input(xv);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  Var o = t.push(std::move(out), t.needs_grad(x));
  const std::size_t xi = x.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [xi, oi](Tape& tp) {
      const Tensor& xin = tp.value_at(xi);
      const Tensor& g = tp.grad_at(oi);
      Tensor& gx = tp.grad_at(xi);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        if (xin[i] > 0.0) gx[i] += g[i];  // subgradient at 0 is 0
      }
    });
  }
  return o;
}

Var sigmoid(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = stable_sigmoid(xv[i]);
  Var o = t.push(std::move(out), t.needs_grad(x));
  const std::size_t xi = x.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [xi, oi](Tape& tp) {
      const Tensor& s = tp.value_at(oi);
      const Tensor& g = tp.grad_at(oi);
      Tensor& gx = tp.grad_at(xi);
      for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * s[i] * (1.0 - s[i]);
    });
  }
  return o;
}

Var batch_norm(Var x, BatchNormState& bn, Mode mode, bool with_grad) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  const std::size_t n = xv.rows(), d = xv.cols();
  if (bn.gamma.value.numel() != d) {
    throw std::invalid_argument("batch_norm: state width " + std::to_string(bn.gamma.value.numel()) +
                                " does not match input " + xv.shape_str());
  }
  Var gamma = with_grad ? t.param(bn.gamma) : t.constant_param(bn.gamma);
  Var beta = with_grad ? t.param(bn.beta) : t.constant_param(bn.beta);
  const Tensor& gv = t.value(gamma);
  const Tensor& bv = t.value(beta);

  Tensor mean({d});
  Tensor var({d});
  if (mode == Mode::Train) {
    if (n < 2) throw std::invalid_argument("batch_norm: train mode requires n >= 2 rows");
    for (std::size_t c = 0; c < d; ++c) {
      double m = 0.0;
      for (std::size_t r = 0; r < n; ++r) m += xv.at(r, c);
      m /= static_cast<double>(n);
      double v = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double dlt = xv.at(r, c) - m;
        v += dlt * dlt;
      }
      v /= static_cast<double>(n);
      mean[c] = m;
      var[c] = v;
      bn.stat_mean_sum[c] += m;
      bn.stat_var_sum[c] += v;
    }
    bn.stat_batches += 1;
  } else {
    if (!bn.finalized) {
      throw std::logic_error("batch_norm: eval mode before statistics finalized");
    }
    mean = bn.eval_mean;
    var = bn.eval_var;
  }

  Tensor inv_std({d});
  for (std::size_t c = 0; c < d; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + kBnVarianceFloor);

  Tensor xhat({n, d});
  Tensor out({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (xv.at(r, c) - mean[c]) * inv_std[c];
      xhat.at(r, c) = h;
      out.at(r, c) = gv[c] * h + bv[c];
    }
  }

  const bool needs = t.needs_grad(x) || with_grad;
  Var o = t.push(std::move(out), needs);
  const std::size_t xi = x.index, gi = gamma.index, bi = beta.index, oi = o.index;
  if (needs) {
    const bool train = (mode == Mode::Train);
    t.set_backprop(oi, [xi, gi, bi, oi, n, d, xhat, inv_std, train](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      const Tensor& gv2 = tp.value_at(gi);
      Tensor& gx = tp.grad_at(xi);
      Tensor& gg = tp.grad_at(gi);
      Tensor& gb = tp.grad_at(bi);
      for (std::size_t c = 0; c < d; ++c) {
        double sum_g = 0.0, sum_gh = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          sum_g += g.at(r, c);
          sum_gh += g.at(r, c) * xhat.at(r, c);
        }
        gg[c] += sum_gh;
        gb[c] += sum_g;
        if (train) {
          const double mg = sum_g / static_cast<double>(n);
          const double mgh = sum_gh / static_cast<double>(n);
          for (std::size_t r = 0; r < n; ++r) {
            gx.at(r, c) += gv2[c] * inv_std[c] * (g.at(r, c) - mg - xhat.at(r, c) * mgh);
          }
        } else {
          for (std::size_t r = 0; r < n; ++r) gx.at(r, c) += gv2[c] * inv_std[c] * g.at(r, c);
        }
      }
    });
  }
  return o;
}

Var add(Var a, Var b) {
  check_same_tape(a, b, "add");
  Tape& t = *a.tape;
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  check_same_shape(av, bv, "add");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] + bv[i];
  Var o = t.push(std::move(out), t.needs_grad(a) || t.needs_grad(b));
  const std::size_t ai = a.index, bi = b.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [ai, bi, oi](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      Tensor& ga = tp.grad_at(ai);
      Tensor& gb = tp.grad_at(bi);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        ga[i] += g[i];
        gb[i] += g[i];
      }
    });
  }
  return o;
}

Var sub(Var a, Var b) {
  check_same_tape(a, b, "sub");
  Tape& t = *a.tape;
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  check_same_shape(av, bv, "sub");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] - bv[i];
  Var o = t.push(std::move(out), t.needs_grad(a) || t.needs_grad(b));
  const std::size_t ai = a.index, bi = b.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [ai, bi, oi](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      Tensor& ga = tp.grad_at(ai);
      Tensor& gb = tp.grad_at(bi);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        ga[i] += g[i];
        gb[i] -= g[i];
      }
    });
  }
  return o;
}

Var mul(Var a, Var b) {
  check_same_tape(a, b, "mul");
  Tape& t = *a.tape;
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  check_same_shape(av, bv, "mul");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] * bv[i];
  Var o = t.push(std::move(out), t.needs_grad(a) || t.needs_grad(b));
  const std::size_t ai = a.index, bi = b.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [ai, bi, oi](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      const Tensor& av2 = tp.value_at(ai);
      const Tensor& bv2 = tp.value_at(bi);
      Tensor& ga = tp.grad_at(ai);
      Tensor& gb = tp.grad_at(bi);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        ga[i] += g[i] * bv2[i];
        gb[i] += g[i] * av2[i];
      }
    });
  }
  return o;
}

Var mul_const(Var a, const Tensor& m) {
  Tape& t = *a.tape;
  const Tensor& av = t.value(a);
  check_same_shape(av, m, "mul_const");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] * m[i];
  Var o = t.push(std::move(out), t.needs_grad(a));
  const std::size_t ai = a.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [ai, oi, m](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      Tensor& ga = tp.grad_at(ai);
      for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * m[i];
    });
  }
  return o;
}

Var scale(Var a, double c) {
  Tape& t = *a.tape;
  const Tensor& av = t.value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] * c;
  Var o = t.push(std::move(out), t.needs_grad(a));
  const std::size_t ai = a.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [ai, oi, c](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      Tensor& ga = tp.grad_at(ai);
      for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * c;
    });
  }
  return o;
}

Var shift(Var a, double c) {
  Tape& t = *a.tape;
  const Tensor& av = t.value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] + c;
  Var o = t.push(std::move(out), t.needs_grad(a));
  const std::size_t ai = a.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [ai, oi](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      Tensor& ga = tp.grad_at(ai);
      for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
    });
  }
  return o;
}

namespace {

// Shared forward/backward for the summed and elementwise log-density ops.
Var gaussian_log_density_impl(Var x, Var mean, Var var, bool row_summed) {
  check_same_tape(x, mean, "gaussian_log_density");
  check_same_tape(x, var, "gaussian_log_density");
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  const Tensor& mv = t.value(mean);
  const Tensor& vv = t.value(var);
  check_same_shape(xv, mv, "gaussian_log_density");
  check_same_shape(xv, vv, "gaussian_log_density");
  check_positive_var(vv, "gaussian_log_density");
  const std::size_t n = xv.rows(), d = xv.cols();
  Tensor out = row_summed ? Tensor({n}) : Tensor({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t i = r * d + c;
      const double diff = xv[i] - mv[i];
      const double term = -0.5 * (kLogTwoPi + std::log(vv[i])) - diff * diff / (2.0 * vv[i]);
      if (row_summed) {
        acc += term;
      } else {
        out[i] = term;
      }
    }
    if (row_summed) out[r] = acc;
  }
  const bool needs = t.needs_grad(x) || t.needs_grad(mean) || t.needs_grad(var);
  Var o = t.push(std::move(out), needs);
  const std::size_t xi = x.index, mi = mean.index, vi = var.index, oi = o.index;
  if (needs) {
    t.set_backprop(oi, [xi, mi, vi, oi, n, d, row_summed](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      const Tensor& xv2 = tp.value_at(xi);
      const Tensor& mv2 = tp.value_at(mi);
      const Tensor& vv2 = tp.value_at(vi);
      Tensor& gx = tp.grad_at(xi);
      Tensor& gm = tp.grad_at(mi);
      Tensor& gv = tp.grad_at(vi);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          const std::size_t i = r * d + c;
          const double gi = row_summed ? g[r] : g[i];
          const double diff = xv2[i] - mv2[i];
          const double inv_v = 1.0 / vv2[i];
          gx[i] += gi * (-diff * inv_v);
          gm[i] += gi * (diff * inv_v);
          gv[i] += gi * (-0.5 * inv_v + diff * diff * 0.5 * inv_v * inv_v);
        }
      }
    });
  }
  return o;
}

}  // namespace

Var gaussian_log_density(Var x, Var mean, Var var) { return gaussian_log_density_impl(x, mean, var, true); }

Var gaussian_log_density_elem(Var x, Var mean, Var var) { return gaussian_log_density_impl(x, mean, var, false); }

Var logaddexp(Var a, Var b) {
  check_same_tape(a, b, "logaddexp");
  Tape& t = *a.tape;
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  check_same_shape(av, bv, "logaddexp");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) {
    const double m = av[i] > bv[i] ? av[i] : bv[i];
    out[i] = m + std::log(std::exp(av[i] - m) + std::exp(bv[i] - m));
  }
  Var o = t.push(std::move(out), t.needs_grad(a) || t.needs_grad(b));
  const std::size_t ai = a.index, bi = b.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [ai, bi, oi](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      const Tensor& y = tp.value_at(oi);
      const Tensor& av2 = tp.value_at(ai);
      const Tensor& bv2 = tp.value_at(bi);
      Tensor& ga = tp.grad_at(ai);
      Tensor& gb = tp.grad_at(bi);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        ga[i] += g[i] * std::exp(av2[i] - y[i]);
        gb[i] += g[i] * std::exp(bv2[i] - y[i]);
      }
    });
  }
  return o;
}

Var row_sum(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  const std::size_t n = xv.rows(), d = xv.cols();
  Tensor out({n});
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += xv.at(r, c);
    out[r] = acc;
  }
  Var o = t.push(std::move(out), t.needs_grad(x));
  const std::size_t xi = x.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [xi, oi, n, d](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      Tensor& gx = tp.grad_at(xi);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += g[r];
      }
    });
  }
  return o;
}

Var sum(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.numel(); ++i) acc += xv[i];
  Var o = t.push(Tensor::scalar(acc), t.needs_grad(x));
  const std::size_t xi = x.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [xi, oi](Tape& tp) {
      const double g = tp.grad_at(oi)[0];
      Tensor& gx = tp.grad_at(xi);
      for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
    });
  }
  return o;
}

Var mean_all(Var x) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  const double inv = 1.0 / static_cast<double>(xv.numel());
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.numel(); ++i) acc += xv[i];
  Var o = t.push(Tensor::scalar(acc * inv), t.needs_grad(x));
  const std::size_t xi = x.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [xi, oi, inv](Tape& tp) {
      const double g = tp.grad_at(oi)[0] * inv;
      Tensor& gx = tp.grad_at(xi);
      for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
    });
  }
  return o;
}

Var reparam(Var mean, Var var, const Tensor& eps) {
  check_same_tape(mean, var, "reparam");
  Tape& t = *mean.tape;
  const Tensor& mv = t.value(mean);
  const Tensor& vv = t.value(var);
  check_same_shape(mv, vv, "reparam");
  check_same_shape(mv, eps, "reparam");
  check_positive_var(vv, "reparam");
  Tensor out(mv.shape());
  for (std::size_t i = 0; i < mv.numel(); ++i) out[i] = mv[i] + std::sqrt(vv[i]) * eps[i];
  Var o = t.push(std::move(out), t.needs_grad(mean) || t.needs_grad(var));
  const std::size_t mi = mean.index, vi = var.index, oi = o.index;
  if (t.needs_grad(o)) {
    t.set_backprop(oi, [mi, vi, oi, eps](Tape& tp) {
      const Tensor& g = tp.grad_at(oi);
      const Tensor& vv2 = tp.value_at(vi);
      Tensor& gm = tp.grad_at(mi);
      Tensor& gv = tp.grad_at(vi);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        gm[i] += g[i];
        gv[i] += g[i] * eps[i] / (2.0 * std::sqrt(vv2[i]));
      }
    });
  }
  return o;
}

Var reparam_sample(Rng& rng, Var mean, Var var) {
  return reparam(mean, var, normal_draws(rng, mean.tape->value(mean).shape()));
}

Tensor gaussian_log_density_values(const Tensor& x, const Tensor& mean, const Tensor& var) {
  check_same_shape(x, mean, "gaussian_log_density_values");
  check_same_shape(x, var, "gaussian_log_density_values");
  check_positive_var(var, "gaussian_log_density_values");
  const std::size_t n = x.rows(), d = x.cols();
  Tensor out({n});
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t i = r * d + c;
      const double diff = x[i] - mean[i];
      acc += -0.5 * (kLogTwoPi + std::log(var[i])) - diff * diff / (2.0 * var[i]);
    }
    out[r] = acc;
  }
  return out;
}

Tensor sigmoid_values(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = stable_sigmoid(x[i]);
  return out;
}

Tensor normal_draws(Rng& rng, const std::vector<std::size_t>& shape) {
  Tensor out(shape);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = rng.normal();
  return out;
}

}  // namespace infusion
