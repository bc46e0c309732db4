#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "infusion/checkpoint.hpp"
#include "infusion/run_config.hpp"

using namespace infusion;
namespace fs = std::filesystem;

namespace {

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::vector<char>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save/load round trip is bit exact") {
  OperatorConfig cfg;
  cfg.d = 3;
  cfg.hidden_sizes = {5, 4};
  cfg.steps = 4;
  cfg.batch_norm = true;
  Rng rng(111);
  TransitionOperator op(cfg, rng);
  FactorialGaussian prior{Tensor::from({3}, {0.2, 0.5, 0.8}), Tensor::from({3}, {0.01, 0.02, 0.03})};

  // Touch the batch-norm statistics so nontrivial state round-trips.
  Tensor batch = Tensor::full({6, 3}, 0.4);
  for (std::size_t i = 0; i < batch.numel(); ++i) batch[i] += 0.01 * static_cast<double>(i % 5);
  op.step_params(batch, 2, Mode::Train);
  op.norm_states()[1][0].finalize_stats();

  const fs::path p1 = fs::temp_directory_path() / "infusion_ck1.bin";
  const fs::path p2 = fs::temp_directory_path() / "infusion_ck2.bin";
  save_checkpoint(p1, op, prior);
  Checkpoint back = load_checkpoint(p1);
  CHECK(back.config.d == 3);
  CHECK(back.config.hidden_sizes == std::vector<std::size_t>{5, 4});
  CHECK(back.config.steps == 4);
  CHECK(back.config.batch_norm);
  CHECK(back.prior.mean[1] == 0.5);
  CHECK(back.op.norm_states()[1][0].finalized);
  CHECK(back.op.norm_states()[1][0].stat_batches == 1);

  save_checkpoint(p2, back.op, back.prior);
  CHECK(read_bytes(p1) == read_bytes(p2));
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("checkpoint rejects corrupted containers") {
  OperatorConfig cfg;
  cfg.d = 2;
  cfg.hidden_sizes = {3};
  cfg.steps = 2;
  Rng rng(112);
  TransitionOperator op(cfg, rng);
  FactorialGaussian prior{Tensor::full({2}, 0.5), Tensor::full({2}, 0.05)};
  const fs::path p = fs::temp_directory_path() / "infusion_ck3.bin";
  save_checkpoint(p, op, prior);

  auto bytes = read_bytes(p);
  auto corrupted = bytes;
  corrupted[0] = 'X';  // magic
  std::ofstream(p, std::ios::binary).write(corrupted.data(), static_cast<std::streamsize>(corrupted.size()));
  CHECK_THROWS_AS(load_checkpoint(p), std::runtime_error);

  corrupted = bytes;
  corrupted[8] = 99;  // version
  std::ofstream(p, std::ios::binary).write(corrupted.data(), static_cast<std::streamsize>(corrupted.size()));
  CHECK_THROWS_AS(load_checkpoint(p), std::runtime_error);

  corrupted.assign(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 2));  // truncation
  std::ofstream(p, std::ios::binary).write(corrupted.data(), static_cast<std::streamsize>(corrupted.size()));
  CHECK_THROWS_AS(load_checkpoint(p), std::runtime_error);
  fs::remove(p);
}

}  // TEST_SUITE

TEST_SUITE("run_config") {

TEST_CASE("presets validate and the text form round-trips") {
  for (const char* name : {"toy2d", "mnist-small"}) {
    RunConfig cfg = preset_config(name);
    CHECK_NOTHROW(cfg.validate());
    const std::string text = format_run_config(cfg);
    RunConfig parsed = parse_run_config(text);
    CHECK(format_run_config(parsed) == text);
  }
  CHECK_THROWS_AS(preset_config("nope"), std::invalid_argument);
}

TEST_CASE("unknown keys and malformed lines are rejected") {
  CHECK_THROWS_AS(parse_run_config("[data]\nbogus_key = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[data\nkind = toy2d\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[train]\neta0 = not_a_number\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("no_equals_sign\n"), std::invalid_argument);
}

TEST_CASE("overrides layer on top of a preset") {
  RunConfig base = preset_config("toy2d");
  RunConfig cfg = parse_run_config("[schedule]\nomega = 0.05\n[run]\nseed = 9\n", base);
  CHECK(cfg.schedule.omega == doctest::Approx(0.05));
  CHECK(cfg.seed == 9);
  CHECK(cfg.op.steps == base.op.steps);
}

TEST_CASE("toy dataset builds with consistent split sizes") {
  RunConfig cfg = preset_config("toy2d");
  cfg.data.toy_n = 200;
  Dataset ds = build_dataset(cfg);
  CHECK(ds.size() == 200);
  CHECK(ds.dim() == 2);
  CHECK(ds.rows_for(SplitLabel::Train).rows() == 140);
  CHECK(ds.rows_for(SplitLabel::Valid).rows() == 30);
  CHECK(ds.rows_for(SplitLabel::Test).rows() == 30);

  Dataset ds2 = build_dataset(cfg);
  CHECK(ds.split_labels == ds2.split_labels);
}

TEST_CASE("digits idx dataset builds when present") {
  const fs::path p = "data/digits8/digits-images.idx";
  if (!fs::exists(p)) return;  // fixture not generated in this tree
  RunConfig cfg = preset_config("mnist-small");
  cfg.data.train_images = p.string();
  cfg.data.limit = 500;
  Dataset ds = build_dataset(cfg);
  CHECK(ds.size() == 500);
  CHECK(ds.dim() == 64);
  CHECK(ds.image_rows == 8);
  for (std::size_t i = 0; i < ds.rows.numel(); ++i) {
    CHECK(ds.rows[i] >= 0.0);
    CHECK(ds.rows[i] <= 1.0);
  }
}

}  // TEST_SUITE
