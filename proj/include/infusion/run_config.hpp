#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "infusion/data_io.hpp"
#include "infusion/evaluation.hpp"
#include "infusion/training.hpp"

namespace infusion {

struct DataConfig {
  std::string kind = "toy2d";  // toy2d | idx
  std::size_t toy_n = 2000;
  double toy_std = 0.05;
  std::string train_images;  // idx kind
  std::string test_images;   // optional, concatenated after train_images
  std::size_t downsample = 0;  // target side length; 0 keeps native size
  std::size_t limit = 0;       // cap on total examples after shuffling; 0 = all
  std::array<double, 3> fractions{0.7, 0.15, 0.15};
};

/// Everything one run needs, with documented defaults for every field.
/// The resolved form is written next to run outputs and reloads to an
/// identical configuration.
struct RunConfig {
  DataConfig data;
  OperatorConfig op;
  InfusionSchedule schedule;
  double eta0 = 1e-3;
  std::string optimizer = "adam";  // adam | sgd
  std::size_t batch_size = 64;
  int epochs = 100;
  std::string objective = "denoising";  // denoising | lower_bound
  double grad_clip = 100.0;
  int val_k = 20;
  EvalConfig eval;
  std::uint64_t seed = 0;
  std::string outdir = "out";

  TrainConfig train_config() const;
  void validate() const;
};

/// Built-in configurations: "toy2d" and "mnist-small".
RunConfig preset_config(const std::string& name);

/// Flat key = value text with [section] headers; unknown keys are errors.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
std::string format_run_config(const RunConfig& cfg);
void write_run_config(const std::filesystem::path& path, const RunConfig& cfg);

/// Materializes the configured dataset (toy generator or IDX files) and
/// applies the deterministic split. Image dims are tracked for grids.
Dataset build_dataset(const RunConfig& cfg);

}  // namespace infusion
