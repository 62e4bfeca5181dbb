#include "trimodal/binary_io.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "trimodal/error.hpp"

namespace trimodal::io {

namespace {

template <typename U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(buf.data(), sizeof(U));
}

}  // namespace

void Writer::magic(std::string_view four_cc) {
  if (four_cc.size() != 4) throw FormatError("magic must be four bytes");
  out_.write(four_cc.data(), 4);
}
void Writer::u8(std::uint8_t v) { put_le(out_, v); }
void Writer::u16(std::uint16_t v) { put_le(out_, v); }
void Writer::u32(std::uint32_t v) { put_le(out_, v); }
void Writer::u64(std::uint64_t v) { put_le(out_, v); }
void Writer::f32(float v) { put_le(out_, std::bit_cast<std::uint32_t>(v)); }
void Writer::f64(double v) { put_le(out_, std::bit_cast<std::uint64_t>(v)); }
void Writer::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void Writer::bytes(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void Reader::fail(const std::string& msg) const { throw FormatError(what_ + ": " + msg); }

void Reader::bytes(void* data, std::size_t n) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) fail("unexpected end of data");
}

namespace {

template <typename U>
U get_le(Reader& r) {
  std::array<unsigned char, sizeof(U)> buf{};
  r.bytes(buf.data(), sizeof(U));
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
  return v;
}

}  // namespace

void Reader::expect_magic(std::string_view four_cc) {
  std::array<char, 4> buf{};
  in_.read(buf.data(), 4);
  if (in_.gcount() != 4 || std::string_view(buf.data(), 4) != four_cc) {
    fail("bad magic, expected '" + std::string(four_cc) + "'");
  }
}
std::uint8_t Reader::u8() { return get_le<std::uint8_t>(*this); }
std::uint16_t Reader::u16() { return get_le<std::uint16_t>(*this); }
std::uint32_t Reader::u32() { return get_le<std::uint32_t>(*this); }
std::uint64_t Reader::u64() { return get_le<std::uint64_t>(*this); }
float Reader::f32() { return std::bit_cast<float>(get_le<std::uint32_t>(*this)); }
double Reader::f64() { return std::bit_cast<double>(get_le<std::uint64_t>(*this)); }

std::string Reader::str(std::size_t max_len) {
  const std::uint32_t n = u32();
  if (n > max_len) fail("string length " + std::to_string(n) + " exceeds limit");
  std::string s(n, '\0');
  bytes(s.data(), n);
  return s;
}

void Reader::expect_end() {
  if (in_.peek() != std::char_traits<char>::eof()) fail("trailing bytes");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace trimodal::io
