#include "modconv/text.hpp"

#include <unicode/uchar.h>

namespace modconv {

namespace {

constexpr char32_t kReplacement = 0xFFFD;
constexpr char32_t kRightSingleQuote = 0x2019;

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::u32string decode_utf8_lossy(std::string_view bytes, std::size_t* replacements) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(bytes[k]); };
  auto bad = [&] {
    out.push_back(kReplacement);
    if (replacements) ++*replacements;
  };
  while (i < n) {
    const unsigned char b0 = byte(i);
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    // Valid second-byte range per lead byte (Unicode Table 3-7).
    unsigned char lo = 0x80, hi = 0xBF;
    if (b0 >= 0xC2 && b0 <= 0xDF) {
      len = 2;
      cp = b0 & 0x1F;
    } else if (b0 >= 0xE0 && b0 <= 0xEF) {
      len = 3;
      cp = b0 & 0x0F;
      if (b0 == 0xE0) lo = 0xA0;
      if (b0 == 0xED) hi = 0x9F;
    } else if (b0 >= 0xF0 && b0 <= 0xF4) {
      len = 4;
      cp = b0 & 0x07;
      if (b0 == 0xF0) lo = 0x90;
      if (b0 == 0xF4) hi = 0x8F;
    } else {
      bad();
      ++i;
      continue;
    }
    // Maximal subpart: consume valid continuation bytes; stop at first invalid one.
    std::size_t k = 1;
    bool ok = true;
    for (; k < len; ++k) {
      if (i + k >= n) {
        ok = false;
        break;
      }
      const unsigned char b = byte(i + k);
      const bool in_range = (k == 1) ? (b >= lo && b <= hi) : is_continuation(b);
      if (!in_range) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (ok) {
      out.push_back(cp);
      i += len;
    } else {
      bad();
      i += k;
    }
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = kReplacement;
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
  return out;
}

std::string sanitize_utf8(std::string_view bytes, std::size_t* replacements) {
  return encode_utf8(decode_utf8_lossy(bytes, replacements));
}

std::string normalize_text(std::string_view text) {
  const std::u32string decoded = decode_utf8_lossy(text);
  std::u32string out;
  out.reserve(decoded.size());
  bool pending_space = false;
  for (char32_t cp : decoded) {
    const auto c = static_cast<UChar32>(cp);
    char32_t kept = 0;
    if (cp == U'\'' || cp == kRightSingleQuote) {
      kept = U'\'';
    } else if (u_isalpha(c) || u_isdigit(c)) {
      kept = static_cast<char32_t>(u_tolower(c));
    }
    if (kept == 0) {
      // Whitespace and every disallowed character both become a separator.
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(kept);
  }
  return encode_utf8(out);
}

std::vector<std::string> split_tokens(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && normalized[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < normalized.size() && normalized[i] != ' ') ++i;
    if (i > start) tokens.emplace_back(normalized.substr(start, i - start));
  }
  return tokens;
}

}  // namespace modconv
