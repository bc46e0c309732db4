#include "infusion/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace infusion {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
}

int parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& v, const std::string& key) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_u64(item, key));
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.steps = op.steps;
  t.schedule = schedule;
  t.eta0 = eta0;
  if (optimizer == "adam") {
    t.optimizer = OptimizerKind::Adam;
  } else if (optimizer == "sgd") {
    t.optimizer = OptimizerKind::Sgd;
  } else {
    throw std::invalid_argument("config: unknown optimizer '" + optimizer + "'");
  }
  t.batch_size = batch_size;
  t.epochs = epochs;
  if (objective == "denoising") {
    t.objective = Objective::Denoising;
  } else if (objective == "lower_bound") {
    t.objective = Objective::LowerBound;
  } else {
    throw std::invalid_argument("config: unknown objective '" + objective + "'");
  }
  t.seed = seed;
  t.grad_clip = grad_clip;
  t.val_k = val_k;
  t.validate();
  return t;
}

void RunConfig::validate() const {
  if (data.kind != "toy2d" && data.kind != "idx") {
    throw std::invalid_argument("config: data.kind must be toy2d or idx");
  }
  op.validate();
  schedule.validate();
  eval.validate();
  (void)train_config();
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  if (name == "toy2d") {
    c.data.kind = "toy2d";
    c.data.toy_n = 2000;
    c.data.toy_std = 0.05;
    c.op.d = 2;
    c.op.hidden_sizes = {64, 64};
    c.op.steps = 10;
    c.op.batch_norm = false;
    c.schedule = InfusionSchedule{0.0, 0.3, 0.03};
    c.eta0 = 1e-3;
    c.epochs = 100;
    c.batch_size = 64;
    c.val_k = 20;
    c.eval.k = 20;
    c.eval.parzen_sigma = 0.17;
    c.eval.parzen_n_samples = 10000;
  } else if (name == "mnist-small") {
    c.data.kind = "idx";
    c.data.train_images = "data/digits8/digits-images.idx";
    c.data.downsample = 8;
    c.data.limit = 2000;
    c.data.fractions = {0.8, 0.1, 0.1};
    c.op.d = 64;
    c.op.hidden_sizes = {256, 256};
    c.op.steps = 15;
    c.op.batch_norm = true;
    c.schedule = InfusionSchedule{0.0, 0.01, 0.03};
    c.eta0 = 1e-3;
    c.epochs = 25;
    c.batch_size = 64;
    c.val_k = 10;
    c.eval.k = 20;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (have: toy2d, mnist-small)");
  }
  return c;
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  RunConfig c = std::move(base);
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;

    if (full == "data.kind") {
      c.data.kind = val;
    } else if (full == "data.toy_n") {
      c.data.toy_n = parse_u64(val, full);
    } else if (full == "data.toy_std") {
      c.data.toy_std = parse_double(val, full);
    } else if (full == "data.train_images") {
      c.data.train_images = val;
    } else if (full == "data.test_images") {
      c.data.test_images = val;
    } else if (full == "data.downsample") {
      c.data.downsample = parse_u64(val, full);
    } else if (full == "data.limit") {
      c.data.limit = parse_u64(val, full);
    } else if (full == "data.frac_train") {
      c.data.fractions[0] = parse_double(val, full);
    } else if (full == "data.frac_valid") {
      c.data.fractions[1] = parse_double(val, full);
    } else if (full == "data.frac_test") {
      c.data.fractions[2] = parse_double(val, full);
    } else if (full == "operator.d") {
      c.op.d = parse_u64(val, full);
    } else if (full == "operator.hidden") {
      c.op.hidden_sizes = parse_size_list(val, full);
    } else if (full == "operator.steps") {
      c.op.steps = parse_int(val, full);
    } else if (full == "operator.share_params") {
      c.op.share_params = parse_bool(val, full);
    } else if (full == "operator.beta") {
      c.op.beta = parse_double(val, full);
    } else if (full == "operator.eps_var") {
      c.op.eps_var = parse_double(val, full);
    } else if (full == "operator.output_mode") {
      if (val == "diagonal") {
        c.op.output_mode = OutputMode::Diagonal;
      } else if (val == "isotropic") {
        c.op.output_mode = OutputMode::Isotropic;
      } else {
        throw std::invalid_argument("config: operator.output_mode must be diagonal or isotropic");
      }
    } else if (full == "operator.fixed_var") {
      c.op.fixed_var = parse_double(val, full);
    } else if (full == "operator.batch_norm") {
      c.op.batch_norm = parse_bool(val, full);
    } else if (full == "schedule.alpha0") {
      c.schedule.alpha0 = parse_double(val, full);
    } else if (full == "schedule.omega") {
      c.schedule.omega = parse_double(val, full);
    } else if (full == "schedule.sigma_delta") {
      c.schedule.sigma_delta = parse_double(val, full);
    } else if (full == "train.eta0") {
      c.eta0 = parse_double(val, full);
    } else if (full == "train.optimizer") {
      c.optimizer = val;
    } else if (full == "train.batch_size") {
      c.batch_size = parse_u64(val, full);
    } else if (full == "train.epochs") {
      c.epochs = parse_int(val, full);
    } else if (full == "train.objective") {
      c.objective = val;
    } else if (full == "train.grad_clip") {
      c.grad_clip = parse_double(val, full);
    } else if (full == "train.val_k") {
      c.val_k = parse_int(val, full);
    } else if (full == "eval.k") {
      c.eval.k = parse_int(val, full);
    } else if (full == "eval.repetitions") {
      c.eval.repetitions = parse_int(val, full);
    } else if (full == "eval.dequantize") {
      c.eval.dequantize = parse_bool(val, full);
    } else if (full == "eval.parzen") {
      c.eval.parzen = parse_bool(val, full);
    } else if (full == "eval.parzen_sigma") {
      c.eval.parzen_sigma = parse_double(val, full);
    } else if (full == "eval.parzen_n_samples") {
      c.eval.parzen_n_samples = parse_u64(val, full);
    } else if (full == "eval.sample_steps") {
      c.eval.sample_steps = parse_int(val, full);
    } else if (full == "run.seed") {
      c.seed = parse_u64(val, full);
    } else if (full == "run.outdir") {
      c.outdir = val;
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + full + "'");
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[data]\n";
  o << "kind = " << c.data.kind << "\n";
  o << "toy_n = " << c.data.toy_n << "\n";
  o << "toy_std = " << fmt_double(c.data.toy_std) << "\n";
  o << "train_images = " << c.data.train_images << "\n";
  o << "test_images = " << c.data.test_images << "\n";
  o << "downsample = " << c.data.downsample << "\n";
  o << "limit = " << c.data.limit << "\n";
  o << "frac_train = " << fmt_double(c.data.fractions[0]) << "\n";
  o << "frac_valid = " << fmt_double(c.data.fractions[1]) << "\n";
  o << "frac_test = " << fmt_double(c.data.fractions[2]) << "\n";
  o << "\n[operator]\n";
  o << "d = " << c.op.d << "\n";
  o << "hidden = ";
  for (std::size_t i = 0; i < c.op.hidden_sizes.size(); ++i) {
    if (i) o << ",";
    o << c.op.hidden_sizes[i];
  }
  o << "\n";
  o << "steps = " << c.op.steps << "\n";
  o << "share_params = " << (c.op.share_params ? "true" : "false") << "\n";
  o << "beta = " << fmt_double(c.op.beta) << "\n";
  o << "eps_var = " << fmt_double(c.op.eps_var) << "\n";
  o << "output_mode = " << (c.op.output_mode == OutputMode::Isotropic ? "isotropic" : "diagonal") << "\n";
  o << "fixed_var = " << fmt_double(c.op.fixed_var) << "\n";
  o << "batch_norm = " << (c.op.batch_norm ? "true" : "false") << "\n";
  o << "\n[schedule]\n";
  o << "alpha0 = " << fmt_double(c.schedule.alpha0) << "\n";
  o << "omega = " << fmt_double(c.schedule.omega) << "\n";
  o << "sigma_delta = " << fmt_double(c.schedule.sigma_delta) << "\n";
  o << "\n[train]\n";
  o << "eta0 = " << fmt_double(c.eta0) << "\n";
  o << "optimizer = " << c.optimizer << "\n";
  o << "batch_size = " << c.batch_size << "\n";
  o << "epochs = " << c.epochs << "\n";
  o << "objective = " << c.objective << "\n";
  o << "grad_clip = " << fmt_double(c.grad_clip) << "\n";
  o << "val_k = " << c.val_k << "\n";
  o << "\n[eval]\n";
  o << "k = " << c.eval.k << "\n";
  o << "repetitions = " << c.eval.repetitions << "\n";
  o << "dequantize = " << (c.eval.dequantize ? "true" : "false") << "\n";
  o << "parzen = " << (c.eval.parzen ? "true" : "false") << "\n";
  o << "parzen_sigma = " << fmt_double(c.eval.parzen_sigma) << "\n";
  o << "parzen_n_samples = " << c.eval.parzen_n_samples << "\n";
  o << "sample_steps = " << c.eval.sample_steps << "\n";
  o << "\n[run]\n";
  o << "seed = " << c.seed << "\n";
  o << "outdir = " << c.outdir << "\n";
  return o.str();
}

void write_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream f(path, std::ios::binary);  // binary: identical bytes everywhere
  if (!f) throw std::runtime_error("cannot write config " + path.string());
  f << format_run_config(cfg);
}

Dataset build_dataset(const RunConfig& cfg) {
  Rng rng = Rng(cfg.seed).stream(stream_tag::kData);
  Dataset ds;
  if (cfg.data.kind == "toy2d") {
    const std::array<std::array<double, 2>, 2> centers{{{0.25, 0.25}, {0.75, 0.75}}};
    ds = toy_two_gaussians(rng, cfg.data.toy_n, centers, cfg.data.toy_std);
  } else if (cfg.data.kind == "idx") {
    if (cfg.data.train_images.empty()) throw std::invalid_argument("config: data.train_images not set");
    IdxTensor raw = load_idx(cfg.data.train_images);
    if (raw.dims.size() != 3) throw std::invalid_argument("data: expected rank-3 image idx file");
    Tensor rows = scale_unit(raw);
    std::size_t h = raw.dims[1], w = raw.dims[2];
    if (!cfg.data.test_images.empty()) {
      IdxTensor raw2 = load_idx(cfg.data.test_images);
      if (raw2.dims.size() != 3 || raw2.dims[1] != h || raw2.dims[2] != w) {
        throw std::invalid_argument("data: test_images shape does not match train_images");
      }
      Tensor rows2 = scale_unit(raw2);
      Tensor merged({rows.rows() + rows2.rows(), rows.cols()});
      for (std::size_t r = 0; r < rows.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) merged.at(r, c) = rows.at(r, c);
      }
      for (std::size_t r = 0; r < rows2.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) merged.at(rows.rows() + r, c) = rows2.at(r, c);
      }
      rows = std::move(merged);
    }
    if (cfg.data.downsample > 0 && (h != cfg.data.downsample || w != cfg.data.downsample)) {
      rows = downsample_box(rows, h, w, cfg.data.downsample, cfg.data.downsample);
      h = w = cfg.data.downsample;
    }
    if (cfg.data.limit > 0 && cfg.data.limit < rows.rows()) {
      // Seeded shuffle, then keep the head.
      const std::size_t n = rows.rows(), d = rows.cols();
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        if (j >= i) j = i - 1;
        std::swap(order[i - 1], order[j]);
      }
      Tensor limited({cfg.data.limit, d});
      for (std::size_t r = 0; r < cfg.data.limit; ++r) {
        for (std::size_t c = 0; c < d; ++c) limited.at(r, c) = rows.at(order[r], c);
      }
      rows = std::move(limited);
    }
    ds.rows = std::move(rows);
    ds.image_rows = h;
    ds.image_cols = w;
    ds.provenance = cfg.data.train_images;
  } else {
    throw std::invalid_argument("config: unknown data.kind '" + cfg.data.kind + "'");
  }
  return split_dataset(std::move(ds), cfg.data.fractions, rng.stream(99).seed());
}

}  // namespace infusion
