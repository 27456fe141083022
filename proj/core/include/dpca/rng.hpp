#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace dpca {

/// One step of the splitmix64 sequence; also a good 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Folds the values into one well-mixed 64-bit seed. Order matters.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) noexcept;

/// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(std::string_view s) noexcept;

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator, so it
/// plugs into Boost.Random distributions.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace dpca
