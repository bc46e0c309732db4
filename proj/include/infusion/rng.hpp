#pragma once

#include <cstdint>
#include <random>

namespace infusion {

/// Deterministic random stream. mt19937_64 is fully specified by the
/// standard and the uniform/normal transforms below avoid the
/// implementation-defined std distributions, so sequences are identical
/// across platforms and across runs for the same seed.
///
/// All randomness in a run flows from one master seed. Substreams are
/// derived with stream(tag) (which does not consume from the parent),
/// nested as needed: rng.stream(kTrain).stream(epoch).stream(batch).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform draw in [0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal via Box-Muller; consumes exactly two uniforms per
  /// call (no caching, so consumption is predictable).
  double normal();

  /// Independent child stream keyed by (this stream's seed, tag).
  Rng stream(std::uint64_t tag) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

// Fixed substream tags used by the CLI and training loop.
namespace stream_tag {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kTrain = 3;
inline constexpr std::uint64_t kValidation = 4;
inline constexpr std::uint64_t kSample = 5;
inline constexpr std::uint64_t kEval = 6;
inline constexpr std::uint64_t kInpaint = 7;
inline constexpr std::uint64_t kStats = 8;
}  // namespace stream_tag

}  // namespace infusion
