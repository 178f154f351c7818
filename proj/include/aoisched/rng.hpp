#pragma once

#include <cstdint>
#include <random>

namespace aoisched {

// SplitMix64 finalizer. Used both to expand the master seed and as a
// counter-based generator for per-slot draws.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Purpose tags for independent random streams.
enum class Stream : std::uint64_t {
  fading = 1,
  outcome = 2,
  plant_noise = 3,
  offsets = 4,
  policy = 5,
};

// Seed of the stream (repetition, purpose, link). Each argument is folded
// through splitmix64 so nearby indices give unrelated seeds.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t repetition, Stream purpose,
                                    std::uint64_t link = 0) noexcept {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ repetition);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  h = splitmix64(h ^ link);
  return h;
}

// Uniform double in [0, 1) from a 64-bit word (top 53 bits).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

using Engine = std::mt19937_64;

}  // namespace aoisched
