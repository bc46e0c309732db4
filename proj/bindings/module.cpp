// Python bindings for the main operations. Tensors cross the boundary as
// numpy float64 arrays.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "infusion/checkpoint.hpp"
#include "infusion/data_io.hpp"
#include "infusion/evaluation.hpp"
#include "infusion/infusion.hpp"
#include "infusion/model.hpp"
#include "infusion/training.hpp"

namespace py = pybind11;
using namespace infusion;

namespace {

Tensor to_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  std::vector<std::size_t> shape(arr.ndim());
  for (py::ssize_t i = 0; i < arr.ndim(); ++i) shape[static_cast<std::size_t>(i)] = arr.shape(i);
  std::vector<double> data(arr.data(), arr.data() + arr.size());
  return Tensor::from(std::move(shape), std::move(data));
}

py::array_t<double> to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.ndim());
  for (std::size_t i = 0; i < t.ndim(); ++i) shape[i] = static_cast<py::ssize_t>(t.shape()[i]);
  py::array_t<double> out(shape);
  std::copy(t.data(), t.data() + t.numel(), out.mutable_data());
  return out;
}

Mode parse_mode(const std::string& mode) {
  if (mode == "train") return Mode::Train;
  if (mode == "eval") return Mode::Eval;
  throw std::invalid_argument("mode must be 'train' or 'eval'");
}

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Markov-chain denoising generator trained by target infusion";

  py::class_<FactorialGaussian>(m, "FactorialGaussian")
      .def(py::init([](const Array& mean, const Array& var) {
             return FactorialGaussian{to_tensor(mean), to_tensor(var)};
           }),
           py::arg("mean"), py::arg("var"))
      .def_property_readonly("mean", [](const FactorialGaussian& g) { return to_array(g.mean); })
      .def_property_readonly("var", [](const FactorialGaussian& g) { return to_array(g.var); });

  py::class_<InfusionSchedule>(m, "InfusionSchedule")
      .def(py::init([](double alpha0, double omega, double sigma_delta) {
             InfusionSchedule s{alpha0, omega, sigma_delta};
             s.validate();
             return s;
           }),
           py::arg("alpha0") = 0.0, py::arg("omega") = 0.01, py::arg("sigma_delta") = 0.03)
      .def_readwrite("alpha0", &InfusionSchedule::alpha0)
      .def_readwrite("omega", &InfusionSchedule::omega)
      .def_readwrite("sigma_delta", &InfusionSchedule::sigma_delta);

  py::class_<OperatorConfig>(m, "OperatorConfig")
      .def(py::init<>())
      .def_readwrite("d", &OperatorConfig::d)
      .def_readwrite("hidden_sizes", &OperatorConfig::hidden_sizes)
      .def_readwrite("steps", &OperatorConfig::steps)
      .def_readwrite("share_params", &OperatorConfig::share_params)
      .def_readwrite("beta", &OperatorConfig::beta)
      .def_readwrite("eps_var", &OperatorConfig::eps_var)
      .def_readwrite("fixed_var", &OperatorConfig::fixed_var)
      .def_readwrite("batch_norm", &OperatorConfig::batch_norm)
      .def_property(
          "output_mode",
          [](const OperatorConfig& c) { return c.output_mode == OutputMode::Isotropic ? "isotropic" : "diagonal"; },
          [](OperatorConfig& c, const std::string& v) {
            if (v == "isotropic") {
              c.output_mode = OutputMode::Isotropic;
            } else if (v == "diagonal") {
              c.output_mode = OutputMode::Diagonal;
            } else {
              throw std::invalid_argument("output_mode must be 'diagonal' or 'isotropic'");
            }
          });

  py::class_<TransitionOperator>(m, "TransitionOperator")
      .def(py::init([](const OperatorConfig& cfg, std::uint64_t seed) {
             Rng rng(seed);
             return TransitionOperator(cfg, rng);
           }),
           py::arg("config"), py::arg("seed") = 0)
      .def_property_readonly("config", &TransitionOperator::config)
      .def("step_params",
           [](TransitionOperator& op, const Array& z_prev, int t, const std::string& mode) {
             return op.step_params(to_tensor(z_prev), t, parse_mode(mode));
           },
           py::arg("z_prev"), py::arg("t"), py::arg("mode") = "train")
      .def("norm_stats_ready", &TransitionOperator::norm_stats_ready)
      .def("set_output_mode", [](TransitionOperator& op, const std::string& mode, double fixed_var) {
        op.set_output_mode(mode == "isotropic" ? OutputMode::Isotropic : OutputMode::Diagonal, fixed_var);
      });

  py::class_<ChainTrace>(m, "ChainTrace")
      .def_property_readonly("states",
                             [](const ChainTrace& t) {
                               py::list out;
                               for (const Tensor& s : t.states) out.append(to_array(s));
                               return out;
                             })
      .def_property_readonly("model_logp",
                             [](const ChainTrace& t) {
                               py::list out;
                               for (const Tensor& s : t.model_logp) out.append(to_array(s));
                               return out;
                             })
      .def_property_readonly("proposal_logq",
                             [](const ChainTrace& t) {
                               py::list out;
                               for (const Tensor& s : t.proposal_logq) out.append(to_array(s));
                               return out;
                             })
      .def("__len__", [](const ChainTrace& t) { return t.length(); });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("steps", &TrainConfig::steps)
      .def_readwrite("schedule", &TrainConfig::schedule)
      .def_readwrite("eta0", &TrainConfig::eta0)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("grad_clip", &TrainConfig::grad_clip)
      .def_readwrite("val_k", &TrainConfig::val_k)
      .def_property(
          "objective",
          [](const TrainConfig& c) { return c.objective == Objective::Denoising ? "denoising" : "lower_bound"; },
          [](TrainConfig& c, const std::string& v) {
            if (v == "denoising") {
              c.objective = Objective::Denoising;
            } else if (v == "lower_bound") {
              c.objective = Objective::LowerBound;
            } else {
              throw std::invalid_argument("objective must be 'denoising' or 'lower_bound'");
            }
          })
      .def_property(
          "optimizer", [](const TrainConfig& c) { return c.optimizer == OptimizerKind::Adam ? "adam" : "sgd"; },
          [](TrainConfig& c, const std::string& v) {
            if (v == "adam") {
              c.optimizer = OptimizerKind::Adam;
            } else if (v == "sgd") {
              c.optimizer = OptimizerKind::Sgd;
            } else {
              throw std::invalid_argument("optimizer must be 'adam' or 'sgd'");
            }
          });

  py::class_<EvalConfig>(m, "EvalConfig")
      .def(py::init<>())
      .def_readwrite("k", &EvalConfig::k)
      .def_readwrite("parzen_sigma", &EvalConfig::parzen_sigma)
      .def_readwrite("parzen_n_samples", &EvalConfig::parzen_n_samples)
      .def_readwrite("parzen", &EvalConfig::parzen)
      .def_readwrite("dequantize", &EvalConfig::dequantize)
      .def_readwrite("repetitions", &EvalConfig::repetitions)
      .def_readwrite("sample_steps", &EvalConfig::sample_steps);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("lb_mean", &EvalReport::lb_mean)
      .def_readonly("lb_std", &EvalReport::lb_std)
      .def_readonly("is_mean", &EvalReport::is_mean)
      .def_readonly("is_std", &EvalReport::is_std)
      .def_readonly("parzen_mean", &EvalReport::parzen_mean)
      .def_readonly("parzen_std", &EvalReport::parzen_std)
      .def_readonly("has_parzen", &EvalReport::has_parzen)
      .def_readonly("k", &EvalReport::k)
      .def_readonly("repetitions", &EvalReport::repetitions);

  m.def("alpha_at", &alpha_at, py::arg("schedule"), py::arg("t"));
  m.def("eta_at", &eta_at, py::arg("config"), py::arg("t"));

  m.def(
      "fit_prior",
      [](const Array& rows, double var_floor) { return fit_prior(to_tensor(rows), var_floor); },
      py::arg("rows"), py::arg("var_floor") = 1e-6);

  m.def(
      "sample_prior",
      [](const FactorialGaussian& prior, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return to_array(sample_prior(rng, prior, n));
      },
      py::arg("prior"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "run_model_chain",
      [](const FactorialGaussian& prior, TransitionOperator& op, int t_sample, std::size_t n, std::uint64_t seed,
         const std::string& mode) {
        Rng rng(seed);
        return run_model_chain(rng, prior, op, t_sample, n, parse_mode(mode));
      },
      py::arg("prior"), py::arg("op"), py::arg("t_sample"), py::arg("n"), py::arg("seed") = 0,
      py::arg("mode") = "train");

  m.def(
      "run_infusion_chain",
      [](const FactorialGaussian& prior, TransitionOperator& op, const InfusionSchedule& sched, const Array& x, int T,
         std::uint64_t seed, const std::string& mode) {
        Rng rng(seed);
        return run_infusion_chain(rng, prior, op, sched, to_tensor(x), T, parse_mode(mode));
      },
      py::arg("prior"), py::arg("op"), py::arg("sched"), py::arg("x"), py::arg("T"), py::arg("seed") = 0,
      py::arg("mode") = "train");

  m.def(
      "run_clamped_chain",
      [](const FactorialGaussian& prior, TransitionOperator& op, const Array& observed, const std::vector<bool>& mask,
         int t_sample, std::size_t restarts, std::uint64_t seed, const std::string& mode) {
        Rng rng(seed);
        return run_clamped_chain(rng, prior, op, to_tensor(observed), mask, t_sample, restarts, parse_mode(mode));
      },
      py::arg("prior"), py::arg("op"), py::arg("observed"), py::arg("mask"), py::arg("t_sample"),
      py::arg("restarts") = 8, py::arg("seed") = 0, py::arg("mode") = "train");

  m.def(
      "chain_log_joint",
      [](const ChainTrace& trace, const FactorialGaussian& prior, TransitionOperator& op, const Array& x,
         const std::string& mode) { return to_array(chain_log_joint(trace, prior, op, to_tensor(x), parse_mode(mode))); },
      py::arg("trace"), py::arg("prior"), py::arg("op"), py::arg("x"), py::arg("mode") = "train");

  m.def(
      "infusion_step",
      [](const FactorialGaussian& op_output, const Array& x, double alpha, double sigma_delta, std::uint64_t seed) {
        Rng rng(seed);
        return to_array(infusion_step(rng, op_output, to_tensor(x), alpha, sigma_delta));
      },
      py::arg("op_output"), py::arg("x"), py::arg("alpha"), py::arg("sigma_delta"), py::arg("seed") = 0);

  m.def(
      "infusion_log_density",
      [](const Array& z, const FactorialGaussian& op_output, const Array& x, double alpha, double sigma_delta) {
        return to_array(infusion_log_density(to_tensor(z), op_output, to_tensor(x), alpha, sigma_delta));
      },
      py::arg("z"), py::arg("op_output"), py::arg("x"), py::arg("alpha"), py::arg("sigma_delta"));

  m.def(
      "elbo_samples",
      [](TransitionOperator& op, const FactorialGaussian& prior, const InfusionSchedule& sched, const Array& x, int k,
         std::uint64_t seed, const std::string& mode) {
        Rng rng(seed);
        return to_array(elbo_samples(op, prior, sched, to_tensor(x), k, rng, parse_mode(mode)));
      },
      py::arg("op"), py::arg("prior"), py::arg("sched"), py::arg("x"), py::arg("k"), py::arg("seed") = 0,
      py::arg("mode") = "train");

  m.def(
      "average_lower_bound",
      [](TransitionOperator& op, const FactorialGaussian& prior, const InfusionSchedule& sched, const Array& x, int k,
         std::uint64_t seed, const std::string& mode) {
        Rng rng(seed);
        return average_lower_bound(op, prior, sched, to_tensor(x), k, rng, parse_mode(mode));
      },
      py::arg("op"), py::arg("prior"), py::arg("sched"), py::arg("x"), py::arg("k"), py::arg("seed") = 0,
      py::arg("mode") = "train");

  m.def("lower_bound_estimate",
        [](const Array& ell) { return lower_bound_estimate(to_tensor(ell)); });
  m.def("is_estimate", [](const Array& ell) { return is_estimate(to_tensor(ell)); });

  m.def(
      "parzen_log_density",
      [](const Array& samples, const Array& x, double sigma) {
        return parzen_log_density(to_tensor(samples), to_tensor(x), sigma);
      },
      py::arg("samples"), py::arg("x"), py::arg("sigma") = 0.17);

  m.def(
      "evaluate_model",
      [](TransitionOperator& op, const FactorialGaussian& prior, const InfusionSchedule& sched, const Array& split,
         const EvalConfig& cfg, std::uint64_t seed, const std::string& mode) {
        Rng rng(seed);
        return evaluate_model(op, prior, sched, to_tensor(split), cfg, rng, parse_mode(mode));
      },
      py::arg("op"), py::arg("prior"), py::arg("sched"), py::arg("split"), py::arg("config"), py::arg("seed") = 0,
      py::arg("mode") = "train");

  m.def(
      "fit_isotropic_variance",
      [](TransitionOperator& op, const FactorialGaussian& prior, const InfusionSchedule& sched, const Array& x,
         std::uint64_t seed, const std::string& mode) {
        Rng rng(seed);
        return fit_isotropic_variance(op, prior, sched, to_tensor(x), rng, parse_mode(mode));
      },
      py::arg("op"), py::arg("prior"), py::arg("sched"), py::arg("x"), py::arg("seed") = 0, py::arg("mode") = "train");

  m.def(
      "train",
      [](TransitionOperator& op, const FactorialGaussian& prior, const Array& train_rows, const Array& valid_rows,
         const TrainConfig& cfg) {
        TrainResult r = train(op, prior, to_tensor(train_rows), to_tensor(valid_rows), cfg);
        py::list history;
        for (const EpochRecord& rec : r.history) {
          py::dict row;
          row["epoch"] = rec.epoch;
          row["train_objective"] = rec.train_objective;
          row["val_lower_bound"] = rec.val_lower_bound;
          row["wall_seconds"] = rec.wall_seconds;
          history.append(row);
        }
        py::dict out;
        out["history"] = history;
        out["best_epoch"] = r.best_epoch;
        out["best_val_lower_bound"] = r.best_val_lb;
        return out;
      },
      py::arg("op"), py::arg("prior"), py::arg("train_rows"), py::arg("valid_rows"), py::arg("config"));

  m.def(
      "toy_two_gaussians",
      [](std::size_t n, double stddev, std::uint64_t seed) {
        Rng rng(seed);
        const std::array<std::array<double, 2>, 2> centers{{{0.25, 0.25}, {0.75, 0.75}}};
        Dataset ds = toy_two_gaussians(rng, n, centers, stddev);
        return to_array(ds.rows);
      },
      py::arg("n"), py::arg("stddev") = 0.05, py::arg("seed") = 0);

  m.def(
      "save_checkpoint",
      [](const std::string& path, const TransitionOperator& op, const FactorialGaussian& prior) {
        save_checkpoint(path, op, prior);
      },
      py::arg("path"), py::arg("op"), py::arg("prior"));

  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        Checkpoint ck = load_checkpoint(path);
        return py::make_tuple(std::move(ck.op), ck.prior);
      },
      py::arg("path"));

  m.def(
      "write_grid",
      [](const Array& images, std::size_t grid_rows, std::size_t grid_cols, std::size_t image_rows,
         std::size_t image_cols, const std::string& path) {
        write_grid(to_tensor(images), grid_rows, grid_cols, image_rows, image_cols, path);
      },
      py::arg("images"), py::arg("grid_rows"), py::arg("grid_cols"), py::arg("image_rows"), py::arg("image_cols"),
      py::arg("path"));
}
