// Command-line driver: train, sample, eval, inpaint, sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "infusion/checkpoint.hpp"
#include "infusion/run_config.hpp"

namespace fs = std::filesystem;
using namespace infusion;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonOpts {
  std::string preset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string outdir;
};

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig cfg = o.preset.empty() ? RunConfig{} : preset_config(o.preset);
  if (!o.config_path.empty()) cfg = load_run_config(o.config_path, cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.outdir.empty()) cfg.outdir = o.outdir;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--preset", o.preset, "Built-in configuration: toy2d or mnist-small");
  cmd->add_option("--config", o.config_path, "Configuration file (overrides the preset)");
  cmd->add_option("--seed", o.seed, "Master seed (overrides config)");
  cmd->add_option("--out", o.outdir, "Output directory");
}

Mode pick_mode(const TransitionOperator& op) {
  return op.norm_stats_ready() ? Mode::Eval : Mode::Train;
}

void write_history_csv(const fs::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "epoch,train_objective,val_lower_bound\n";
  for (const EpochRecord& r : history) {
    f << r.epoch << "," << fmt(r.train_objective) << "," << fmt(r.val_lower_bound) << "\n";
  }
}

// Serialized chain states: small versioned container of tensors.
void write_states(const fs::path& path, const ChainTrace& trace) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  const char magic[8] = {'I', 'N', 'F', 'S', 'T', 'A', 'T', '\0'};
  f.write(magic, 8);
  const std::uint32_t version = 1;
  f.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint32_t count = static_cast<std::uint32_t>(trace.states.size());
  f.write(reinterpret_cast<const char*>(&count), 4);
  for (const Tensor& t : trace.states) {
    const std::uint32_t nd = static_cast<std::uint32_t>(t.ndim());
    f.write(reinterpret_cast<const char*>(&nd), 4);
    for (std::size_t s : t.shape()) {
      const std::uint64_t v = s;
      f.write(reinterpret_cast<const char*>(&v), 8);
    }
    f.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
}

// Infusion-chain visualization: one row per target, chain states left to
// right, the target itself in the last column.
void write_infusion_grid(const fs::path& path, const ChainTrace& trace, const Tensor& targets, std::size_t img_h,
                         std::size_t img_w) {
  const std::size_t n = trace.rows();
  const std::size_t cols = trace.length() + 1;
  Tensor grid({n * cols, targets.cols()});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = 0; s < trace.length(); ++s) {
      for (std::size_t c = 0; c < targets.cols(); ++c) grid.at(r * cols + s, c) = trace.states[s].at(r, c);
    }
    for (std::size_t c = 0; c < targets.cols(); ++c) grid.at(r * cols + cols - 1, c) = targets.at(r, c);
  }
  write_grid(grid, n, cols, img_h, img_w, path);
}

std::pair<std::size_t, std::size_t> image_dims(const Dataset& ds) {
  if (ds.image_rows > 0) return {ds.image_rows, ds.image_cols};
  return {1, ds.dim()};  // non-image data renders as 1-pixel-tall strips
}

int cmd_train(const CommonOpts& common, int override_epochs) {
  RunConfig cfg = resolve_config(common);
  if (override_epochs >= 0) cfg.epochs = override_epochs;
  cfg.validate();
  fs::create_directories(cfg.outdir);
  write_run_config(fs::path(cfg.outdir) / "config.ini", cfg);

  Dataset ds = build_dataset(cfg);
  const Tensor train_rows = ds.rows_for(SplitLabel::Train);
  const Tensor valid_rows = ds.rows_for(SplitLabel::Valid);
  const auto [img_h, img_w] = image_dims(ds);
  if (cfg.op.d != ds.dim()) {
    throw std::runtime_error("config: operator.d=" + std::to_string(cfg.op.d) + " but data dimension is " +
                             std::to_string(ds.dim()));
  }

  Rng master(cfg.seed);
  FactorialGaussian prior = fit_prior(train_rows);
  Rng init_rng = master.stream(stream_tag::kInit);
  TransitionOperator op(cfg.op, init_rng);
  TrainConfig tcfg = cfg.train_config();

  const std::size_t n_viz = std::min<std::size_t>(8, train_rows.rows());
  Tensor viz_targets({n_viz, ds.dim()});
  for (std::size_t r = 0; r < n_viz; ++r) {
    for (std::size_t c = 0; c < ds.dim(); ++c) viz_targets.at(r, c) = train_rows.at(r, c);
  }

  auto on_epoch = [&](const EpochRecord& rec, TransitionOperator& current) {
    std::printf("epoch %d: train objective %.4f, val lower bound %.4f (%.2fs)\n", rec.epoch, rec.train_objective,
                rec.val_lower_bound, rec.wall_seconds);
    std::fflush(stdout);
    if (n_viz >= 2 || !cfg.op.batch_norm) {
      Rng viz_rng = master.stream(stream_tag::kSample).stream(static_cast<std::uint64_t>(rec.epoch));
      ChainTrace trace =
          run_infusion_chain(viz_rng, prior, current, cfg.schedule, viz_targets, cfg.op.steps, Mode::Train);
      char name[64];
      std::snprintf(name, sizeof(name), "epoch_%03d_infusion.pgm", rec.epoch);
      write_infusion_grid(fs::path(cfg.outdir) / name, trace, viz_targets, img_h, img_w);
    }
  };

  TrainResult result = train(op, prior, train_rows, valid_rows, tcfg, on_epoch);
  write_history_csv(fs::path(cfg.outdir) / "history.csv", result.history);
  if (result.best_epoch > 0) {
    std::printf("best validation lower bound %.4f at epoch %d\n", result.best_val_lb, result.best_epoch);
  }

  if (cfg.op.batch_norm) {
    Rng stats_rng = master.stream(stream_tag::kStats);
    compute_norm_statistics(op, prior, cfg.schedule, train_rows, cfg.batch_size, stats_rng);
  }
  save_checkpoint(fs::path(cfg.outdir) / "checkpoint.bin", op, prior);

  // Final sample grid from the trained operator.
  const std::size_t n_show = 64;
  Rng sample_rng = master.stream(stream_tag::kSample).stream(0);
  const int t_sample = cfg.eval.sample_steps > 0 ? cfg.eval.sample_steps : cfg.op.steps;
  ChainTrace trace = run_model_chain(sample_rng, prior, op, t_sample, n_show, pick_mode(op));
  const int t_eff = std::min<int>(t_sample, op.steps());
  FactorialGaussian last = op.step_params(trace.states[trace.length() - 2], t_eff, pick_mode(op));
  write_grid(last.mean, 8, 8, img_h, img_w, fs::path(cfg.outdir) / "samples.pgm");
  std::printf("artifacts written to %s\n", cfg.outdir.c_str());
  return 0;
}

int cmd_sample(const CommonOpts& common, const std::string& checkpoint, std::size_t n, int steps) {
  RunConfig cfg = resolve_config(common);
  fs::create_directories(cfg.outdir);
  Checkpoint ck = load_checkpoint(checkpoint);
  const int t_sample = steps > 0 ? steps : ck.config.steps;
  Rng rng = Rng(cfg.seed).stream(stream_tag::kSample);
  const Mode mode = pick_mode(ck.op);
  ChainTrace trace = run_model_chain(rng, ck.prior, ck.op, t_sample, n, mode);

  std::size_t img_h = 1, img_w = ck.config.d;
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(ck.config.d))));
  if (side * side == ck.config.d) {
    img_h = img_w = side;
  }

  // Mean images of the final transition, one per chain.
  const int t_eff = std::min<int>(t_sample, ck.op.steps());
  FactorialGaussian last = ck.op.step_params(trace.states[trace.length() - 2], t_eff, mode);
  std::size_t grid_rows = 1, grid_cols = n;
  for (std::size_t g = static_cast<std::size_t>(std::sqrt(static_cast<double>(n))); g >= 1; --g) {
    if (n % g == 0) {
      grid_rows = g;
      grid_cols = n / g;
      break;
    }
  }
  write_grid(last.mean, grid_rows, grid_cols, img_h, img_w, fs::path(cfg.outdir) / "samples.pgm");

  // Chain strips: one row per chain, states left to right.
  const std::size_t n_strip = std::min<std::size_t>(n, 8);
  Tensor strip({n_strip * trace.length(), ck.config.d});
  for (std::size_t r = 0; r < n_strip; ++r) {
    for (std::size_t s = 0; s < trace.length(); ++s) {
      for (std::size_t c = 0; c < ck.config.d; ++c) strip.at(r * trace.length() + s, c) = trace.states[s].at(r, c);
    }
  }
  write_grid(strip, n_strip, trace.length(), img_h, img_w, fs::path(cfg.outdir) / "chain.pgm");
  write_states(fs::path(cfg.outdir) / "states.bin", trace);
  std::printf("sampled %zu chains of %d steps into %s\n", n, t_sample, cfg.outdir.c_str());
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& checkpoint, const std::string& split_name, bool isotropic) {
  RunConfig cfg = resolve_config(common);
  fs::create_directories(cfg.outdir);
  Checkpoint ck = load_checkpoint(checkpoint);
  Dataset ds = build_dataset(cfg);
  SplitLabel label = SplitLabel::Test;
  if (split_name == "train") {
    label = SplitLabel::Train;
  } else if (split_name == "valid") {
    label = SplitLabel::Valid;
  } else if (split_name != "test") {
    throw std::invalid_argument("--split must be train, valid or test");
  }
  const Tensor rows = ds.rows_for(label);
  if (rows.rows() == 0) throw std::runtime_error("selected split is empty");

  Rng rng = Rng(cfg.seed).stream(stream_tag::kEval);
  const Mode mode = pick_mode(ck.op);

  if (isotropic) {
    const Tensor train_rows = ds.rows_for(SplitLabel::Train);
    Rng fit_rng = rng.stream(7);
    const double v = fit_isotropic_variance(ck.op, ck.prior, cfg.schedule, train_rows, fit_rng, mode);
    ck.op.set_output_mode(OutputMode::Isotropic, v);
    std::printf("isotropic output variance fitted on the training split: %.6g\n", v);
  }

  EvalReport rep = evaluate_model(ck.op, ck.prior, cfg.schedule, rows, cfg.eval, rng, mode);

  std::printf("split=%s points=%zu k=%d repetitions=%d\n", split_name.c_str(), rows.rows(), rep.k, rep.repetitions);
  std::printf("%-22s %14s %14s\n", "estimator", "mean", "std");
  std::printf("%-22s %14.4f %14.4f\n", "lower_bound", rep.lb_mean, rep.lb_std);
  std::printf("%-22s %14.4f %14.4f\n", "importance_sampling", rep.is_mean, rep.is_std);
  if (rep.has_parzen) std::printf("%-22s %14.4f %14.4f\n", "parzen", rep.parzen_mean, rep.parzen_std);

  std::ofstream f(fs::path(cfg.outdir) / "report.csv", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write report.csv");
  f << "estimator,mean,std,k,repetitions,seed\n";
  f << "lower_bound," << fmt(rep.lb_mean) << "," << fmt(rep.lb_std) << "," << rep.k << "," << rep.repetitions << ","
    << cfg.seed << "\n";
  f << "importance_sampling," << fmt(rep.is_mean) << "," << fmt(rep.is_std) << "," << rep.k << "," << rep.repetitions
    << "," << cfg.seed << "\n";
  if (rep.has_parzen) {
    f << "parzen," << fmt(rep.parzen_mean) << "," << fmt(rep.parzen_std) << "," << rep.k << "," << rep.repetitions
      << "," << cfg.seed << "\n";
  }
  return 0;
}

std::vector<bool> parse_mask(const std::string& spec, std::size_t h, std::size_t w) {
  std::vector<bool> mask(h * w, false);
  auto set_rows = [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::size_t c = 0; c < w; ++c) mask[r * w + c] = true;
    }
  };
  auto set_cols = [&](std::size_t c0, std::size_t c1) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = c0; c < c1; ++c) mask[r * w + c] = true;
    }
  };
  if (spec == "top-half") {
    set_rows(0, h / 2);
  } else if (spec == "bottom-half") {
    set_rows(h / 2, h);
  } else if (spec == "left-half") {
    set_cols(0, w / 2);
  } else if (spec == "right-half") {
    set_cols(w / 2, w);
  } else {
    throw std::invalid_argument("--mask must be top-half, bottom-half, left-half or right-half");
  }
  return mask;
}

int cmd_inpaint(const CommonOpts& common, const std::string& checkpoint, const std::string& mask_spec,
                std::size_t index, std::size_t restarts, int steps) {
  RunConfig cfg = resolve_config(common);
  fs::create_directories(cfg.outdir);
  Checkpoint ck = load_checkpoint(checkpoint);
  Dataset ds = build_dataset(cfg);
  const Tensor rows = ds.rows_for(SplitLabel::Test);
  if (index >= rows.rows()) {
    throw std::invalid_argument("--index " + std::to_string(index) + " out of range (test split has " +
                                std::to_string(rows.rows()) + " rows)");
  }
  const auto [img_h, img_w] = image_dims(ds);
  const std::vector<bool> mask = parse_mask(mask_spec, img_h, img_w);
  Tensor observed = Tensor::from({ds.dim()}, rows.row(index));

  Rng rng = Rng(cfg.seed).stream(stream_tag::kInpaint);
  const Mode mode = pick_mode(ck.op);
  const int t_sample = steps > 0 ? steps : ck.config.steps;
  ChainTrace trace = run_clamped_chain(rng, ck.prior, ck.op, observed, mask, t_sample, restarts, mode);

  // Row: original, observed part with prior noise elsewhere, completions.
  Tensor grid({2 + restarts, ds.dim()});
  for (std::size_t c = 0; c < ds.dim(); ++c) grid.at(0, c) = observed[c];
  Rng noise_rng = rng.stream(1);
  Tensor prior_row = sample_prior(noise_rng, ck.prior, 1);
  for (std::size_t c = 0; c < ds.dim(); ++c) grid.at(1, c) = mask[c] ? observed[c] : prior_row.at(0, c);
  const Tensor& final_states = trace.states.back();
  for (std::size_t r = 0; r < restarts; ++r) {
    for (std::size_t c = 0; c < ds.dim(); ++c) grid.at(2 + r, c) = final_states.at(r, c);
  }
  write_grid(grid, 1, 2 + restarts, img_h, img_w, fs::path(cfg.outdir) / "inpaint.pgm");
  std::printf("inpainted test image %zu with %zu restarts into %s\n", index, restarts, cfg.outdir.c_str());
  return 0;
}

int cmd_sweep(const CommonOpts& common, const std::vector<int>& steps_grid, const std::vector<double>& alpha0_grid,
              const std::vector<double>& omega_grid, int override_epochs) {
  RunConfig base = resolve_config(common);
  if (override_epochs >= 0) base.epochs = override_epochs;
  if (steps_grid.empty() || alpha0_grid.empty() || omega_grid.empty()) {
    throw std::invalid_argument("sweep: empty grid");
  }
  fs::create_directories(base.outdir);
  write_run_config(fs::path(base.outdir) / "config.ini", base);

  std::ofstream summary(fs::path(base.outdir) / "summary.csv", std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write summary.csv");
  summary << "steps,alpha0,omega,best_val_lower_bound,best_epoch\n";

  std::size_t cell = 0;
  for (int T : steps_grid) {
    for (double a0 : alpha0_grid) {
      for (double om : omega_grid) {
        RunConfig cfg = base;
        cfg.op.steps = T;
        cfg.schedule.alpha0 = a0;
        cfg.schedule.omega = om;
        char name[32];
        std::snprintf(name, sizeof(name), "cell_%03zu", cell);
        cfg.outdir = (fs::path(base.outdir) / name).string();
        fs::create_directories(cfg.outdir);
        cfg.validate();

        Dataset ds = build_dataset(cfg);
        const Tensor train_rows = ds.rows_for(SplitLabel::Train);
        const Tensor valid_rows = ds.rows_for(SplitLabel::Valid);
        FactorialGaussian prior = fit_prior(train_rows);
        Rng init_rng = Rng(cfg.seed).stream(stream_tag::kInit).stream(cell);
        TransitionOperator op(cfg.op, init_rng);
        TrainResult result = train(op, prior, train_rows, valid_rows, cfg.train_config());
        write_history_csv(fs::path(cfg.outdir) / "history.csv", result.history);
        if (cfg.op.batch_norm) {
          Rng stats_rng = Rng(cfg.seed).stream(stream_tag::kStats).stream(cell);
          compute_norm_statistics(op, prior, cfg.schedule, train_rows, cfg.batch_size, stats_rng);
        }
        save_checkpoint(fs::path(cfg.outdir) / "checkpoint.bin", op, prior);
        summary << T << "," << fmt(a0) << "," << fmt(om) << "," << fmt(result.best_val_lb) << ","
                << result.best_epoch << "\n";
        std::printf("cell %zu: T=%d alpha0=%g omega=%g -> best val LB %.4f (epoch %d)\n", cell, T, a0, om,
                    result.best_val_lb, result.best_epoch);
        std::fflush(stdout);
        ++cell;
      }
    }
  }
  std::printf("sweep summary written to %s\n", (fs::path(base.outdir) / "summary.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-chain denoising generator: infusion training, sampling, likelihood estimation"};
  app.require_subcommand(1);

  CommonOpts train_opts, sample_opts, eval_opts, inpaint_opts, sweep_opts;
  int train_epochs = -1;
  std::string sample_ckpt, eval_ckpt, inpaint_ckpt;
  std::size_t sample_n = 64;
  int sample_steps = 0;
  std::string eval_split = "test";
  bool eval_isotropic = false;
  std::string inpaint_mask = "top-half";
  std::size_t inpaint_index = 0, inpaint_restarts = 8;
  int inpaint_steps = 0;
  std::vector<int> sweep_steps{2, 10};
  std::vector<double> sweep_alpha0{0.0};
  std::vector<double> sweep_omega{0.01, 0.05, 0.1, 0.3};
  int sweep_epochs = -1;

  CLI::App* c_train = app.add_subcommand("train", "Train a transition operator");
  add_common(c_train, train_opts);
  c_train->add_option("--epochs", train_epochs, "Override epoch count");

  CLI::App* c_sample = app.add_subcommand("sample", "Sample chains from a checkpoint");
  add_common(c_sample, sample_opts);
  c_sample->add_option("--checkpoint", sample_ckpt, "Checkpoint file")->required();
  c_sample->add_option("--n", sample_n, "Number of chains");
  c_sample->add_option("--steps", sample_steps, "Sampling steps (0 = training steps)");

  CLI::App* c_eval = app.add_subcommand("eval", "Estimate log-likelihood on a split");
  add_common(c_eval, eval_opts);
  c_eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  c_eval->add_option("--split", eval_split, "train | valid | test");
  c_eval->add_flag("--isotropic", eval_isotropic, "Evaluate with a fitted isotropic output variance");

  CLI::App* c_inpaint = app.add_subcommand("inpaint", "Complete a partially observed test image");
  add_common(c_inpaint, inpaint_opts);
  c_inpaint->add_option("--checkpoint", inpaint_ckpt, "Checkpoint file")->required();
  c_inpaint->add_option("--mask", inpaint_mask, "top-half | bottom-half | left-half | right-half");
  c_inpaint->add_option("--index", inpaint_index, "Test-split row to complete");
  c_inpaint->add_option("--restarts", inpaint_restarts, "Number of independent completions");
  c_inpaint->add_option("--steps", inpaint_steps, "Sampling steps (0 = training steps)");

  CLI::App* c_sweep = app.add_subcommand("sweep", "Train a grid over (steps, alpha0, omega)");
  add_common(c_sweep, sweep_opts);
  c_sweep->add_option("--steps-grid", sweep_steps, "Step counts");
  c_sweep->add_option("--alpha0-grid", sweep_alpha0, "Initial rates");
  c_sweep->add_option("--omega-grid", sweep_omega, "Rate increments");
  c_sweep->add_option("--epochs", sweep_epochs, "Override epoch count per cell");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_train->parsed()) return cmd_train(train_opts, train_epochs);
    if (c_sample->parsed()) return cmd_sample(sample_opts, sample_ckpt, sample_n, sample_steps);
    if (c_eval->parsed()) return cmd_eval(eval_opts, eval_ckpt, eval_split, eval_isotropic);
    if (c_inpaint->parsed()) {
      return cmd_inpaint(inpaint_opts, inpaint_ckpt, inpaint_mask, inpaint_index, inpaint_restarts, inpaint_steps);
    }
    if (c_sweep->parsed()) return cmd_sweep(sweep_opts, sweep_steps, sweep_alpha0, sweep_omega, sweep_epochs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
