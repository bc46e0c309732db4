#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "infusion/rng.hpp"
#include "infusion/tensor.hpp"

namespace infusion {

enum class SplitLabel : std::uint8_t { Train = 0, Valid = 1, Test = 2 };

struct Dataset {
  Tensor rows;                              // [n,d], values in the documented domain
  std::vector<std::uint8_t> split_labels;   // one SplitLabel per row; empty until split()
  std::string provenance;
  std::size_t image_rows = 0;               // 0 for non-image data
  std::size_t image_cols = 0;
  std::function<double(std::span<const double>)> analytic_log_density;  // toy sets only

  std::size_t size() const { return rows.rows(); }
  std::size_t dim() const { return rows.cols(); }
  Tensor rows_for(SplitLabel label) const;
};

/// Unsigned-byte IDX payload (the only element type used here).
struct IdxTensor {
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> data;
};

/// Parses an IDX file: zero bytes, element-type byte 0x08 (u8), rank
/// byte, big-endian u32 dimension sizes, payload of exactly prod(dims)
/// bytes. Throws std::runtime_error on malformed headers or truncation.
IdxTensor load_idx(const std::filesystem::path& path);
void write_idx(const std::filesystem::path& path, const IdxTensor& t);

/// u8 payload scaled by 1/255 into [0,1], flattened to [n, prod(rest)].
Tensor scale_unit(const IdxTensor& raw);

/// Equal-weight mixture of two isotropic Gaussians inside [0,1]^2
/// (out-of-box draws are retried). The analytic callback returns the
/// unclipped mixture log density.
Dataset toy_two_gaussians(Rng& rng, std::size_t n, const std::array<std::array<double, 2>, 2>& centers, double stddev);

/// Deterministic shuffled partition; fractions must be nonnegative and
/// sum to 1 (train gets floor(f0 n), valid floor(f1 n), test the rest).
Dataset split_dataset(Dataset ds, const std::array<double, 3>& fractions, std::uint64_t seed);

/// Box-filter downsampling of flattened [n, in_h*in_w] images, exact
/// fractional pixel coverage.
Tensor downsample_box(const Tensor& rows, std::size_t in_h, std::size_t in_w, std::size_t out_h, std::size_t out_w);

/// Tiles m images (rows of values in [0,1], clamped) into a grid_rows x
/// grid_cols grid and writes binary PGM (P5). Quantization is
/// round-half-up: byte = floor(255*v + 0.5). Output bytes are a pure
/// function of the input.
void write_grid(const Tensor& images, std::size_t grid_rows, std::size_t grid_cols, std::size_t image_rows,
                std::size_t image_cols, const std::filesystem::path& path);

}  // namespace infusion
