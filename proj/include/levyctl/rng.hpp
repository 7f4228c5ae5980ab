#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace levyctl {

namespace detail {
// Ziggurat acceptance thresholds and layer widths, filled at static initialization.
extern std::array<std::uint32_t, 128> kZigK;
extern std::array<double, 128> kZigW;
}  // namespace detail

/// SplitMix64 step; used to expand a (seed, stream id) pair into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Mixes a master seed with a stream identifier and a tag into a 64-bit key.
constexpr std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t stream,
                                   std::uint64_t tag = 0) {
  std::uint64_t s = master_seed;
  std::uint64_t k = splitmix64(s);
  s = k ^ (stream * 0xD1B54A32D192ED03ULL);
  k = splitmix64(s);
  s = k ^ (tag * 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(s);
}

/*!
 * xoshiro256++ generator, one instance per simulated path.
 *
 * Streams are identified by (master seed, path index, tag) and are derived
 * through SplitMix64, so a path's draws never depend on which worker
 * simulates it or how many paths share the batch.
 */
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t tag = 0) {
    std::uint64_t s = stream_key(master_seed, stream, tag);
    for (auto& word : state_) word = splitmix64(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Exponential with the given rate.
  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Standard normal via a 128-layer ziggurat.
  double normal() {
    const std::uint64_t bits = (*this)();
    const auto iz = static_cast<std::size_t>(bits & 127U);
    const auto hz = static_cast<std::int32_t>(static_cast<std::uint32_t>(bits >> 32));
    const auto mag = static_cast<std::uint32_t>(hz < 0 ? -static_cast<std::int64_t>(hz) : hz);
    if (mag < detail::kZigK[iz]) return hz * detail::kZigW[iz];
    return normal_slow(iz, hz);
  }

 private:
  double normal_slow(std::size_t iz, std::int32_t hz);

  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace levyctl
