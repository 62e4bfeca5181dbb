#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace trimodal::io {

// Little-endian primitive writer. Byte order is fixed regardless of host.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void magic(std::string_view four_cc);
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f32(float v);
  void f64(double v);
  void str(std::string_view s);
  void bytes(const void* data, std::size_t n);

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  // Throws FormatError when the next four bytes differ.
  void expect_magic(std::string_view four_cc);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32();
  double f64();
  std::string str(std::size_t max_len = 1u << 24);
  void bytes(void* data, std::size_t n);
  // Throws unless the stream is exhausted.
  void expect_end();

  [[noreturn]] void fail(const std::string& msg) const;

 private:
  std::istream& in_;
  std::string what_;
};

// Whole-file helpers that report the path in errors.
[[nodiscard]] std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace trimodal::io
