#include "medlang/text.hpp"

#include <array>
#include <cstdint>

namespace medlang::text {
namespace {

// Decodes one UTF-8 code point at pos; returns its length in bytes (1 for
// invalid sequences, which then decode to the raw byte value).
std::size_t decode(std::string_view s, std::size_t pos, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) {
      cp = (char32_t(b0 & 0x1F) << 6) | char32_t(c1);
      return 2;
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(c1) << 6) | char32_t(c2);
      return 3;
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      cp = (char32_t(b0 & 0x07) << 18) | (char32_t(c1) << 12) | (char32_t(c2) << 6) |
           char32_t(c3);
      return 4;
    }
  }
  cp = b0;
  return 1;
}

bool is_space(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  // Latin-1 punctuation, general punctuation block, CJK symbols.
  return (cp >= 0xA1 && cp <= 0xBF && cp != 0xAA && cp != 0xB5 && cp != 0xBA) ||
         (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x3001 && cp <= 0x3003);
}

struct CodePoint {
  std::size_t begin;
  std::size_t size;
  char32_t value;
};

std::vector<CodePoint> code_points(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    char32_t cp;
    const std::size_t n = decode(s, pos, cp);
    out.push_back({pos, n, cp});
    pos += n;
  }
  return out;
}

std::string normalize_token(std::string_view raw) {
  if (is_dash_token(raw)) return std::string(raw);
  const auto cps = code_points(raw);
  std::size_t first = 0, last = cps.size();
  while (first < last && is_punct(cps[first].value)) ++first;
  while (last > first && is_punct(cps[last - 1].value)) --last;
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    const char32_t cp = cps[i].value;
    if (cp == 0x2019 || cp == 0x2018) {
      out.push_back('\'');
    } else if (cp >= U'A' && cp <= U'Z') {
      out.push_back(static_cast<char>(cp - U'A' + U'a'));
    } else {
      out.append(raw.substr(cps[i].begin, cps[i].size));
    }
  }
  return out;
}

}  // namespace

std::string_view trim_right(std::string_view text) {
  const auto cps = code_points(text);
  std::size_t end = cps.size();
  while (end > 0 && is_space(cps[end - 1].value)) --end;
  return end == 0 ? text.substr(0, 0) : text.substr(0, cps[end - 1].begin + cps[end - 1].size);
}

std::string_view trim(std::string_view text) {
  const auto cps = code_points(text);
  std::size_t begin = 0, end = cps.size();
  while (begin < end && is_space(cps[begin].value)) ++begin;
  while (end > begin && is_space(cps[end - 1].value)) --end;
  if (begin == end) return text.substr(0, 0);
  return text.substr(cps[begin].begin,
                     cps[end - 1].begin + cps[end - 1].size - cps[begin].begin);
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const auto cps = code_points(text);
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_space(cps[i].value)) ++i;
    if (i == cps.size()) break;
    const std::size_t start = cps[i].begin;
    while (i < cps.size() && !is_space(cps[i].value)) ++i;
    const std::size_t stop = i < cps.size() ? cps[i].begin : text.size();
    auto token = normalize_token(text.substr(start, stop - start));
    if (!token.empty()) tokens.push_back(std::move(token));
  }
  return tokens;
}

std::string normalize_phrase(std::string_view phrase) {
  std::string out;
  for (const auto& token : tokenize(phrase)) {
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

bool ends_with_interruption_marker(std::string_view text, bool strict) {
  const std::string_view t = trim_right(text);
  if (t.size() >= 3 && t.substr(t.size() - 3) == "- -") return true;
  return !strict && t.size() >= 2 && t.substr(t.size() - 2) == "--";
}

}  // namespace medlang::text
