#include "dpca/wire.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include <boost/crc.hpp>

#include "dpca/error.hpp"

namespace dpca::wire {

namespace {

template <typename T>
std::size_t put_le(std::span<std::byte> out, std::size_t offset, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[offset + i] = static_cast<std::byte>((value >> (8 * i)) & 0xffu);
  }
  return offset + sizeof(T);
}

template <typename T>
T get_le(std::span<const std::byte> in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(std::to_integer<unsigned>(in[offset + i])) << (8 * i);
  }
  return value;
}

}  // namespace

std::uint32_t crc32(std::span<const std::byte> bytes) noexcept {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::vector<std::byte> encode(const Frame& frame) {
  const auto& v = frame.basis.columns();
  const auto p = static_cast<std::uint32_t>(v.rows());
  const auto k = static_cast<std::uint32_t>(v.cols());
  const std::size_t payload = static_cast<std::size_t>(p) * k * 8;
  std::vector<std::byte> out(kHeaderSize + payload + kTrailerSize);
  std::copy(kMagic.begin(), kMagic.end(), out.begin());
  std::size_t at = kMagic.size();
  at = put_le<std::uint16_t>(out, at, kVersion);
  at = put_le<std::uint16_t>(out, at, static_cast<std::uint16_t>(frame.type));
  at = put_le<std::uint32_t>(out, at, frame.machine_id);
  at = put_le<std::uint32_t>(out, at, p);
  at = put_le<std::uint32_t>(out, at, k);
  for (Index i = 0; i < v.size(); ++i) {
    at = put_le<std::uint64_t>(out, at, std::bit_cast<std::uint64_t>(v.data()[i]));
  }
  const std::uint32_t crc = crc32(std::span(out).subspan(kHeaderSize, payload));
  put_le<std::uint32_t>(out, at, crc);
  return out;
}

Header parse_header(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderSize) throw ProtocolError("frame shorter than header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw ProtocolError("bad magic");
  }
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kVersion) {
    throw ProtocolError("unsupported version " + std::to_string(version));
  }
  const auto type = get_le<std::uint16_t>(bytes, 6);
  if (type != static_cast<std::uint16_t>(MessageType::eigenspace_uplink) &&
      type != static_cast<std::uint16_t>(MessageType::basis_downlink)) {
    throw ProtocolError("unknown message type " + std::to_string(type));
  }
  Header h{static_cast<MessageType>(type), get_le<std::uint32_t>(bytes, 8),
           get_le<std::uint32_t>(bytes, 12), get_le<std::uint32_t>(bytes, 16)};
  if (h.k == 0 || h.k > h.p) {
    throw ProtocolError("invalid basis shape " + std::to_string(h.p) + "x" +
                            std::to_string(h.k),
                        h.machine_id);
  }
  if (std::uint64_t{h.p} * h.k > kMaxScalars) {
    throw ProtocolError("payload too large", h.machine_id);
  }
  return h;
}

Frame decode_body(const Header& header, std::span<const std::byte> body) {
  if (body.size() != header.body_size()) {
    throw ProtocolError("truncated or oversized frame body", header.machine_id);
  }
  const std::size_t payload_bytes = body.size() - kTrailerSize;
  const auto expected = get_le<std::uint32_t>(body, payload_bytes);
  if (crc32(body.first(payload_bytes)) != expected) {
    throw ProtocolError("CRC mismatch", header.machine_id);
  }
  Eigen::MatrixXd v(header.p, header.k);
  for (Index i = 0; i < v.size(); ++i) {
    v.data()[i] = std::bit_cast<double>(
        get_le<std::uint64_t>(body, static_cast<std::size_t>(i) * 8));
  }
  try {
    return Frame{header.type, header.machine_id, OrthonormalBasis(std::move(v))};
  } catch (const Error& e) {
    throw ProtocolError(std::string("received basis rejected: ") + e.what(),
                        header.machine_id);
  }
}

Frame decode(std::span<const std::byte> bytes) {
  const Header h = parse_header(bytes);
  return decode_body(h, bytes.subspan(kHeaderSize));
}

}  // namespace dpca::wire
