#pragma once

// Minimal UTF-8 helpers: enough to split words, detach punctuation and
// casefold Latin text. No normalization, no bidi.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace stylemt::utf8 {

struct Decoded {
  char32_t cp;
  std::size_t length;  // bytes consumed, always >= 1
};

/// Decodes one code point at `pos`. Malformed sequences decode as U+FFFD
/// consuming a single byte so scanning always makes progress.
inline Decoded decode(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0xFFFD, 1};
  }
  if (pos + len > s.size()) return {0xFFFD, 1};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[pos + k]);
    if ((b & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

inline void append(std::string &out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline bool is_space(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

/// Punctuation that is detached from the start or end of a word.
inline bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    switch (cp) {
      case U'.': case U',': case U';': case U':': case U'!': case U'?':
      case U'"': case U'\'': case U'(': case U')': case U'[': case U']':
      case U'{': case U'}': case U'<': case U'>': case U'`': case U'*':
        return true;
      default:
        return false;
    }
  }
  switch (cp) {
    case 0xA1: case 0xAB: case 0xBB: case 0xBF:         // ¡ « » ¿
    case 0x2013: case 0x2014:                           // en dash, em dash
    case 0x2018: case 0x2019: case 0x201A:              // ‘ ’ ‚
    case 0x201C: case 0x201D: case 0x201E:              // “ ” „
    case 0x2026: case 0x2039: case 0x203A:              // … ‹ ›
      return true;
    default:
      return false;
  }
}

inline char32_t fold(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  // Latin-1 supplement capitals, except the multiplication sign.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  // Latin Extended-A alternates upper/lower in pairs; the parity flips twice.
  if ((cp >= 0x100 && cp <= 0x137 && cp != 0x130) || (cp >= 0x14A && cp <= 0x177)) {
    return cp % 2 == 0 ? cp + 1 : cp;
  }
  if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) {
    return cp % 2 == 1 ? cp + 1 : cp;
  }
  if (cp == 0x178) return 0xFF;
  return cp;
}

/// Simple casefold for Latin scripts; other code points pass through.
inline std::string casefold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    const auto d = decode(s, pos);
    if (d.cp == 0xFFFD && d.length == 1 && static_cast<unsigned char>(s[pos]) >= 0x80) {
      out.push_back(s[pos]);
    } else {
      append(out, fold(d.cp));
    }
    pos += d.length;
  }
  return out;
}

/// True when every code point of `s` is detachable punctuation.
inline bool is_punct_only(std::string_view s) {
  if (s.empty()) return false;
  for (std::size_t pos = 0; pos < s.size();) {
    const auto d = decode(s, pos);
    if (!is_punct(d.cp)) return false;
    pos += d.length;
  }
  return true;
}

}  // namespace stylemt::utf8
