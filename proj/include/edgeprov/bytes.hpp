#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeprov/error.hpp"

namespace edgeprov {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

bool is_valid_utf8(std::string_view s) noexcept;

/// Big-endian appender over a byte vector.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }

  // u16 length prefix followed by the bytes.
  void str16(std::string_view s);
  // u16 item count; throws TooManyItems above 65,535.
  void count16(std::size_t n);

 private:
  Bytes& out_;
};

/// Bounds-checked big-endian reader. Every underrun throws Errc::Malformed.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

  ByteView take(std::size_t n) {
    need(n);
    auto view = data_.subspan(pos_, n);
    pos_ += n;
    return view;
  }
  // u16 length + UTF-8 payload; invalid UTF-8 is Malformed.
  std::string str16();

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  ByteView rest() const noexcept { return data_.subspan(pos_); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(Errc::Malformed, "truncated input");
  }

  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace edgeprov
