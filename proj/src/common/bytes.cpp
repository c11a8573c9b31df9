#include "edgeprov/bytes.hpp"

namespace edgeprov {

bool is_valid_utf8(std::string_view s) noexcept {
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp >= 0xD800 && cp <= 0xDFFF) return false;
    if (cp > 0x10FFFF) return false;
    i += len;
  }
  return true;
}

void ByteWriter::str16(std::string_view s) {
  if (s.size() > 0xFFFF) throw Error(Errc::StringTooLong, "string of " + std::to_string(s.size()) + " bytes");
  u16(static_cast<std::uint16_t>(s.size()));
  raw(as_bytes(s));
}

void ByteWriter::count16(std::size_t n) {
  if (n > 0xFFFF) throw Error(Errc::TooManyItems, "list of " + std::to_string(n) + " items");
  u16(static_cast<std::uint16_t>(n));
}

std::string ByteReader::str16() {
  const auto len = u16();
  auto view = take(len);
  std::string s(reinterpret_cast<const char*>(view.data()), view.size());
  if (!is_valid_utf8(s)) throw Error(Errc::Malformed, "invalid UTF-8");
  return s;
}

}  // namespace edgeprov
