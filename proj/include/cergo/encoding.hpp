// SPDX-License-Identifier: Apache-2.0

// Bijections used to identify group elements with natural numbers.
//
//   zigzag:  z >= 0 -> 2z,  z < 0 -> -2z - 1
//   pair:    (a, b) -> (a + b)(a + b + 1)/2 + b      (Cantor)
//
// A coordinate vector (z_1, ..., z_d) is encoded as the left fold
// pair(...pair(pair(u_1, u_2), u_3)..., u_d) of the zigzagged coordinates
// u_i = zigzag(z_i); for d = 1 the code is u_1.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>

#include "cergo/error.hpp"

namespace cergo::encoding {

inline constexpr std::int64_t coordinate_limit = std::int64_t{1} << 62;

inline std::uint64_t zigzag(std::int64_t z) {
  if (z >= coordinate_limit || z <= -coordinate_limit) {
    throw malformed_element("coordinate " + std::to_string(z) + " out of encodable range");
  }
  return z >= 0 ? static_cast<std::uint64_t>(z) * 2
                : static_cast<std::uint64_t>(-(z + 1)) * 2 + 1;
}

inline std::int64_t unzigzag(std::uint64_t u) {
  return (u & 1U) == 0 ? static_cast<std::int64_t>(u >> 1)
                       : -static_cast<std::int64_t>(u >> 1) - 1;
}

inline std::uint64_t pair(std::uint64_t a, std::uint64_t b) {
  using wide = unsigned __int128;
  wide const s = static_cast<wide>(a) + b;
  wide const z = s * (s + 1) / 2 + b;
  if (z > std::numeric_limits<std::uint64_t>::max()) {
    throw malformed_element("code overflow while pairing " + std::to_string(a) + " and " +
                            std::to_string(b));
  }
  return static_cast<std::uint64_t>(z);
}

/// Inverse of pair().
inline std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t z) {
  using wide = unsigned __int128;
  // w = floor((sqrt(8z + 1) - 1) / 2), the largest w with w(w+1)/2 <= z.
  auto tri = [](wide w) { return w * (w + 1) / 2; };
  wide w = static_cast<wide>((std::sqrt(8.0L * static_cast<long double>(z) + 1.0L) - 1.0L) / 2.0L);
  while (w > 0 && tri(w) > z) {
    --w;
  }
  while (tri(w + 1) <= z) {
    ++w;
  }
  auto const b = static_cast<std::uint64_t>(z - tri(w));
  auto const a = static_cast<std::uint64_t>(w - b);
  return {a, b};
}

}  // namespace cergo::encoding
