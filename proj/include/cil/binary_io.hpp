#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "cil/error.hpp"

// Little-endian primitives shared by every checkpoint and dataset codec.
namespace cil::binary {

template <typename T>
concept LittleEndianCodable = std::is_arithmetic_v<T> && (sizeof(T) == 1 || sizeof(T) == 2 ||
                                                          sizeof(T) == 4 || sizeof(T) == 8);

namespace detail {

template <std::size_t N>
using Bytes = std::array<unsigned char, N>;

template <typename T>
Bytes<sizeof(T)> to_le(T value) {
  auto bytes = std::bit_cast<Bytes<sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  return bytes;
}

template <typename T>
T from_le(Bytes<sizeof(T)> bytes) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  return std::bit_cast<T>(bytes);
}

}  // namespace detail

template <LittleEndianCodable T>
void write(std::ostream& out, T value) {
  const auto bytes = detail::to_le(value);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <LittleEndianCodable T>
T read(std::istream& in, const char* context = "stream") {
  detail::Bytes<sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorCode::TruncatedFile, std::string("unexpected end of ") + context);
  }
  return detail::from_le<T>(bytes);
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (in.gcount() != static_cast<std::streamsize>(got.size()) || got != magic) {
    throw Error(ErrorCode::BadMagic, "expected magic \"" + std::string(magic) + "\"");
  }
}

inline void require_good(const std::ostream& out, const char* context) {
  if (!out) throw Error(ErrorCode::Io, std::string("write failed: ") + context);
}

// Used after a fixed-size blob to reject trailing garbage.
inline void expect_eof(std::istream& in, const char* context) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::CountMismatch, std::string("trailing bytes after ") + context);
  }
}

}  // namespace cil::binary
