#pragma once

#include <acnet/types.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace acnet::io {

/// Little-endian fixed-width writer. Output is identical on every host.
class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw std::runtime_error("write failed");
  }
  void magic(std::string_view m) { bytes(m.data(), m.size()); }

  template <typename T>
  void integer(T v) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(v);
    std::array<unsigned char, sizeof(T)> buf{};
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xffu);
    bytes(buf.data(), buf.size());
  }
  void u8(std::uint8_t v) { integer(v); }
  void u32(std::uint32_t v) { integer(v); }
  void u64(std::uint64_t v) { integer(v); }
  void i32(std::int32_t v) { integer(v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  template <typename T>
  void vec(const std::vector<T>& v) {
    u64(v.size());
    for (const T& x : v) {
      if constexpr (std::is_floating_point_v<T>) {
        f64(static_cast<double>(x));
      } else {
        integer(x);
      }
    }
  }

 private:
  std::ostream& out_;
};

/// Counterpart of LeWriter; every short read throws DataError.
class LeReader {
 public:
  explicit LeReader(std::istream& in) : in_(in) {}

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("unexpected end of file");
  }
  void expect_magic(std::string_view m) {
    std::string got(m.size(), '\0');
    bytes(got.data(), got.size());
    if (got != m) throw DataError("bad magic: expected '" + std::string(m) + "'");
  }

  template <typename T>
  T integer() {
    static_assert(std::is_integral_v<T>);
    std::array<unsigned char, sizeof(T)> buf{};
    bytes(buf.data(), buf.size());
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    return static_cast<T>(u);
  }
  std::uint8_t u8() { return integer<std::uint8_t>(); }
  std::uint32_t u32() { return integer<std::uint32_t>(); }
  std::uint64_t u64() { return integer<std::uint64_t>(); }
  std::int32_t i32() { return integer<std::int32_t>(); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t max_len = 1u << 24) {
    const std::uint32_t n = u32();
    if (n > max_len) throw DataError("string length out of range");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  template <typename T>
  std::vector<T> vec(std::uint64_t max_len = std::uint64_t{1} << 34) {
    const std::uint64_t n = u64();
    if (n > max_len) throw DataError("array length out of range");
    std::vector<T> v;
    v.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 20)));
    for (std::uint64_t i = 0; i < n; ++i) {
      if constexpr (std::is_floating_point_v<T>) {
        v.push_back(static_cast<T>(f64()));
      } else {
        v.push_back(integer<T>());
      }
    }
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace acnet::io
