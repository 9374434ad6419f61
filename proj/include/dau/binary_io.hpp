#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "dau/errors.hpp"

namespace dau::io {

template <class T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (!in) throw IoError("unexpected end of binary stream");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline void write_doubles(std::ostream& out, std::span<const double> v) {
  write_le<std::uint64_t>(out, v.size());
  for (double x : v) write_le<double>(out, x);
}

/// Reads a length-prefixed array into `dst`, which must already have the
/// stored length.
inline void read_doubles_into(std::istream& in, std::span<double> dst) {
  const auto n = read_le<std::uint64_t>(in);
  if (n != dst.size()) throw IoError("stored array length does not match the destination");
  for (double& x : dst) x = read_le<double>(in);
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_le<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, std::size_t max_len = 1 << 20) {
  const auto n = read_le<std::uint64_t>(in);
  if (n > max_len) throw IoError("implausible string length in binary stream");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw IoError("unexpected end of binary stream");
  return s;
}

}  // namespace dau::io
