#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace octcnn {

/// Deterministic pseudo-random generator used everywhere in the engine.
///
/// Algorithm: xoshiro256++ (Blackman & Vigna), state seeded through
/// splitmix64. The uint64 stream, and every float derived from it by the
/// arithmetic below, is identical for a given seed on every platform;
/// no <random> distributions are used because their output is
/// implementation-defined.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0,1): top 24 bits of the stream scaled by 2^-24.
    float next_float();

    /// Uniform in [lo,hi) as lo + (hi-lo)*next_float().
    float uniform(float lo, float hi);

    /// Uniform integer in [0,n), n >= 1. Multiply-shift reduction of the
    /// top 32 bits; the (negligible) modulo bias is accepted for the sake
    /// of a fixed, rejection-free draw count.
    std::uint32_t next_below(std::uint32_t n);

    /// Fisher-Yates, descending index, one next_below(i+1) draw per step.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_below(static_cast<std::uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t state_[4];
};

/// splitmix64-style mixing of two words; used to derive independent
/// sub-streams, e.g. per (seed, sample, epoch).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// FNV-1a 64-bit hash of a string (stable across platforms).
std::uint64_t hash_string(std::string_view s);

} // namespace octcnn
