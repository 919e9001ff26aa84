#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ulem {

// Splits UTF-8 text into one std::string per Unicode scalar value.
// Invalid byte sequences throw; treebank text is required to be valid UTF-8.
inline std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    std::size_t len;
    if (b < 0x80) len = 1;
    else if ((b & 0xE0) == 0xC0) len = 2;
    else if ((b & 0xF0) == 0xE0) len = 3;
    else if ((b & 0xF8) == 0xF0) len = 4;
    else throw std::runtime_error("invalid UTF-8 lead byte");
    if (i + len > s.size()) throw std::runtime_error("truncated UTF-8 sequence");
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80)
        throw std::runtime_error("invalid UTF-8 continuation byte");
    }
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0, i = 0;
  while (i < s.size()) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    if (b < 0x80) i += 1;
    else if ((b & 0xE0) == 0xC0) i += 2;
    else if ((b & 0xF0) == 0xE0) i += 3;
    else if ((b & 0xF8) == 0xF0) i += 4;
    else throw std::runtime_error("invalid UTF-8 lead byte");
    ++n;
  }
  return n;
}

}  // namespace ulem
