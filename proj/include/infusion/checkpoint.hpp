#pragma once

#include <filesystem>

#include "infusion/model.hpp"

namespace infusion {

struct Checkpoint {
  OperatorConfig config;
  FactorialGaussian prior;
  TransitionOperator op;
};

/// Versioned binary container: operator config, prior, every parameter
/// tensor, and per-step normalization statistics. Doubles are stored as
/// raw IEEE-754 bytes (little-endian), so save/load round-trips are
/// bit-exact.
void save_checkpoint(const std::filesystem::path& path, const TransitionOperator& op, const FactorialGaussian& prior);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace infusion
