#include "infusion/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace infusion {

namespace {

constexpr char kMagic[8] = {'I', 'N', 'F', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : f_(path, std::ios::binary) {
    if (!f_) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  }
  void bytes(const void* p, std::size_t n) { f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }
  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t s : t.shape()) u64(s);
    bytes(t.data(), t.numel() * sizeof(double));
  }
  bool good() const { return static_cast<bool>(f_); }

 private:
  std::ofstream f_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : f_(path, std::ios::binary) {
    if (!f_) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    if (!f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n))) {
      throw std::runtime_error("load_checkpoint: truncated file");
    }
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  std::int32_t i32() {
    std::int32_t v;
    bytes(&v, 4);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  Tensor tensor() {
    const std::uint32_t nd = u32();
    if (nd > 8) throw std::runtime_error("load_checkpoint: bad tensor rank");
    std::vector<std::size_t> shape(nd);
    std::size_t numel = 1;
    for (auto& s : shape) {
      s = u64();
      if (s == 0 || numel > (1u << 30) / s) throw std::runtime_error("load_checkpoint: bad tensor shape");
      numel *= s;
    }
    Tensor t(shape);
    bytes(t.data(), numel * sizeof(double));
    return t;
  }

 private:
  std::ifstream f_;
};

void write_tensor_into(Reader& r, Tensor& dst, const char* what) {
  Tensor t = r.tensor();
  if (!t.same_shape(dst)) {
    throw std::runtime_error(std::string("load_checkpoint: ") + what + " shape mismatch, file has " + t.shape_str() +
                             " expected " + dst.shape_str());
  }
  dst = std::move(t);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TransitionOperator& op,
                     const FactorialGaussian& prior) {
  const OperatorConfig& cfg = op.config();
  Writer w(path);
  w.bytes(kMagic, 8);
  w.u32(kVersion);
  w.u64(cfg.d);
  w.u32(static_cast<std::uint32_t>(cfg.hidden_sizes.size()));
  for (std::size_t h : cfg.hidden_sizes) w.u64(h);
  w.i32(cfg.steps);
  w.u8(cfg.share_params ? 1 : 0);
  w.f64(cfg.beta);
  w.f64(cfg.eps_var);
  w.u8(cfg.output_mode == OutputMode::Isotropic ? 1 : 0);
  w.f64(cfg.fixed_var);
  w.u8(cfg.batch_norm ? 1 : 0);
  w.tensor(prior.mean);
  w.tensor(prior.var);
  w.u32(static_cast<std::uint32_t>(op.stacks().size()));
  for (const MlpStack& s : op.stacks()) {
    for (const DenseLayer& l : s.hidden) {
      w.tensor(l.w.value);
      w.tensor(l.b.value);
    }
    w.tensor(s.mean_head.w.value);
    w.tensor(s.mean_head.b.value);
    w.tensor(s.var_head.w.value);
    w.tensor(s.var_head.b.value);
  }
  for (const auto& step : op.norm_states()) {
    for (const BatchNormState& b : step) {
      w.tensor(b.gamma.value);
      w.tensor(b.beta.value);
      w.tensor(b.stat_mean_sum);
      w.tensor(b.stat_var_sum);
      w.u64(b.stat_batches);
      w.tensor(b.eval_mean);
      w.tensor(b.eval_var);
      w.u8(b.finalized ? 1 : 0);
    }
  }
  if (!w.good()) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("load_checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));
  }
  OperatorConfig cfg;
  cfg.d = r.u64();
  cfg.hidden_sizes.resize(r.u32());
  for (auto& h : cfg.hidden_sizes) h = r.u64();
  cfg.steps = r.i32();
  cfg.share_params = r.u8() != 0;
  cfg.beta = r.f64();
  cfg.eps_var = r.f64();
  cfg.output_mode = r.u8() != 0 ? OutputMode::Isotropic : OutputMode::Diagonal;
  cfg.fixed_var = r.f64();
  cfg.batch_norm = r.u8() != 0;
  cfg.validate();

  FactorialGaussian prior;
  prior.mean = r.tensor();
  prior.var = r.tensor();
  if (prior.mean.numel() != cfg.d || !prior.mean.same_shape(prior.var)) {
    throw std::runtime_error("load_checkpoint: prior shape mismatch");
  }

  TransitionOperator op = TransitionOperator::make_uninitialized(cfg);
  const std::uint32_t n_stacks = r.u32();
  if (n_stacks != op.stacks().size()) throw std::runtime_error("load_checkpoint: stack count mismatch");
  for (MlpStack& s : op.stacks()) {
    for (DenseLayer& l : s.hidden) {
      write_tensor_into(r, l.w.value, "hidden weight");
      write_tensor_into(r, l.b.value, "hidden bias");
    }
    write_tensor_into(r, s.mean_head.w.value, "mean head weight");
    write_tensor_into(r, s.mean_head.b.value, "mean head bias");
    write_tensor_into(r, s.var_head.w.value, "var head weight");
    write_tensor_into(r, s.var_head.b.value, "var head bias");
  }
  for (auto& step : op.norm_states()) {
    for (BatchNormState& b : step) {
      write_tensor_into(r, b.gamma.value, "bn gamma");
      write_tensor_into(r, b.beta.value, "bn beta");
      write_tensor_into(r, b.stat_mean_sum, "bn mean sum");
      write_tensor_into(r, b.stat_var_sum, "bn var sum");
      b.stat_batches = r.u64();
      write_tensor_into(r, b.eval_mean, "bn eval mean");
      write_tensor_into(r, b.eval_var, "bn eval var");
      b.finalized = r.u8() != 0;
    }
  }
  return Checkpoint{std::move(cfg), std::move(prior), std::move(op)};
}

}  // namespace infusion
