#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dpca/matrix.hpp"

/// Binary frame exchanged between workers and the coordinator. All integers
/// little-endian:
///
///   "DPCA" | version u16 (=1) | msg_type u16 | machine_id u32 | p u32 | k u32
///   | p*k IEEE-754 binary64, column-major | CRC32 (u32) of the binary64 bytes
namespace dpca::wire {

inline constexpr std::array<std::byte, 4> kMagic{std::byte{'D'}, std::byte{'P'},
                                                 std::byte{'C'}, std::byte{'A'}};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 20;
inline constexpr std::size_t kTrailerSize = 4;
/// Upper bound on p*k accepted from the network.
inline constexpr std::uint64_t kMaxScalars = std::uint64_t{1} << 27;

enum class MessageType : std::uint16_t {
  eigenspace_uplink = 1,
  basis_downlink = 2,
};

struct Header {
  MessageType type;
  std::uint32_t machine_id;
  std::uint32_t p;
  std::uint32_t k;

  /// Bytes following the header: payload plus CRC.
  std::size_t body_size() const noexcept {
    return static_cast<std::size_t>(p) * k * sizeof(double) + kTrailerSize;
  }
};

struct Frame {
  MessageType type;
  std::uint32_t machine_id;
  OrthonormalBasis basis;
};

std::vector<std::byte> encode(const Frame& frame);

/// Validates magic, version, message type and size limits.
Header parse_header(std::span<const std::byte> bytes);

/// Decodes the body that follows `header`; verifies the CRC and re-checks
/// orthonormality of the received basis.
Frame decode_body(const Header& header, std::span<const std::byte> body);

/// parse_header + decode_body on one contiguous buffer.
Frame decode(std::span<const std::byte> bytes);

std::uint32_t crc32(std::span<const std::byte> bytes) noexcept;

}  // namespace dpca::wire
