#pragma once

#include <array>
#include <cstdint>

namespace hofilt {

/// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

/// Stream identifiers. Each driver component owns a fixed stream so a path
/// is reproducible regardless of which worker generates it.
namespace stream {
inline constexpr std::uint32_t kInitial = 0x100;  // + state component
inline constexpr std::uint32_t kSignal = 0x200;   // + noise component (V)
inline constexpr std::uint32_t kObsNoise = 0x300; // + observation component (W)
inline constexpr std::uint32_t kObs = 0x400;      // + observation component (Y under P-tilde)
}  // namespace stream

/// Standard normals addressed by (seed, path, stream, position). Sequential
/// draws reuse the second Box-Muller output of each block.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path, std::uint32_t stream_id);

  double next();
  /// Value at an absolute position, independent of the read cursor.
  double at(std::uint64_t position) const;

 private:
  std::array<double, 2> block(std::uint64_t b) const;

  PhiloxKey key_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_stream_;
  std::uint64_t pos_ = 0;
  std::array<double, 2> cache_{};
  std::uint64_t cached_block_ = ~std::uint64_t{0};
};

/// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace hofilt
