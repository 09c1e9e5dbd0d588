#include "spectraprune/random.hpp"

#include <cmath>
#include <numbers>

namespace spectraprune {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::array<std::uint32_t, 4> block(std::uint64_t seed, RandomStream stream, std::uint64_t i,
                                   std::uint64_t j) {
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
      static_cast<std::uint32_t>(j),
      (static_cast<std::uint32_t>(j >> 32) & 0xFFFFu) |
          (static_cast<std::uint32_t>(stream) << 16)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  return philox4x32(counter, key);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

double uniform01(std::uint64_t seed, RandomStream stream, std::uint64_t i,
                 std::uint64_t j) noexcept {
  const auto r = block(seed, stream, i, j);
  return to_unit(r[0], r[1]);
}

double standard_normal(std::uint64_t seed, RandomStream stream, std::uint64_t i,
                       std::uint64_t j) noexcept {
  const auto r = block(seed, stream, i, j);
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - to_unit(r[0], r[1]);
  const double u2 = to_unit(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace spectraprune
