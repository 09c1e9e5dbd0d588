#pragma once

#include <array>
#include <cstdint>

namespace spectraprune {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (key, counter), so entry (i, j) of a matrix can be sampled independently of
// evaluation order.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

enum class RandomStream : std::uint32_t {
  kBernoulli = 0,
  kGaussianSketch = 1,
};

/// Uniform double in [0, 1) with 53 random bits, keyed by (seed, stream, i, j).
double uniform01(std::uint64_t seed, RandomStream stream, std::uint64_t i,
                 std::uint64_t j) noexcept;

/// Standard normal via Box-Muller on one Philox block.
double standard_normal(std::uint64_t seed, RandomStream stream, std::uint64_t i,
                       std::uint64_t j) noexcept;

}  // namespace spectraprune
