#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace wpn {

/// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output depends only on
/// (key, counter), so any draw can be reproduced without replaying a stream.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key) : k0_(std::uint32_t(key)), k1_(std::uint32_t(key >> 32)) {}

  Block operator()(Block ctr) const {
    std::uint32_t k0 = k0_, k1 = k1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * ctr[2];
      ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ k0, std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ ctr[3] ^ k1,
             std::uint32_t(p0)};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return ctr;
  }

 private:
  std::uint32_t k0_, k1_;
};

/// Uniform in (0, 1): 53 random bits, never exactly 0 or 1.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t(hi) << 21) ^ (std::uint64_t(lo) >> 11);
  return (double(bits & ((std::uint64_t(1) << 53) - 1)) + 0.5) * 0x1.0p-53;
}

/// Two independent standard normals for draw `index` of stream `stream` under `key` (Box-Muller).
inline std::array<double, 2> normal_pair(std::uint64_t key, std::uint64_t index, std::uint32_t stream = 0) {
  const auto r = Philox4x32(key)({std::uint32_t(index), std::uint32_t(index >> 32), stream, 0x5eedu});
  const double u1 = to_unit(r[0], r[1]), u2 = to_unit(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 6.283185307179586 * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

inline double standard_normal(std::uint64_t key, std::uint64_t index, std::uint32_t stream = 0) {
  return normal_pair(key, index, stream)[0];
}

}  // namespace wpn
