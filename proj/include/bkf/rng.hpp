#pragma once

#include <array>
#include <cstdint>

namespace bkf {

// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Stream id for (replication, chain); distinct pairs map to distinct counters.
constexpr std::uint64_t stream_id(std::uint32_t replication, std::uint32_t chain) noexcept {
  return (static_cast<std::uint64_t>(replication) << 32) | chain;
}

/// Counter-based random stream keyed by (seed, stream). Two streams with the same
/// seed and stream id produce identical sequences; different stream ids address
/// disjoint counter ranges, so streams need no coordination.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t blocks_used() const noexcept { return block_; }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  double normal() noexcept;
  double exponential() noexcept;
  // Gamma(shape, scale = 1), Marsaglia-Tsang; shape > 0 unchecked here.
  double gamma(double shape) noexcept;
  // Uniform integer in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace bkf
