#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace robtext {

// A token is a surface string: one Unicode scalar in char mode, one
// whitespace-delimited word in word mode. Working on surface tokens keeps
// perturbation independent of any vocabulary; ids are produced only at the
// embedding boundary.
using TokenString = std::vector<std::string>;

enum class Alphabet { Char, Word };

inline const char* to_string(Alphabet a) {
  return a == Alphabet::Char ? "char" : "word";
}

namespace detail {

// Decodes one UTF-8 scalar starting at `i`; advances `i`. Invalid bytes are
// passed through as single-byte tokens.
inline std::string utf8_next(std::string_view s, size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  size_t len = 1;
  if (b0 >= 0xF0)
    len = 4;
  else if (b0 >= 0xE0)
    len = 3;
  else if (b0 >= 0xC0)
    len = 2;
  if (i + len > s.size()) len = 1;
  std::string out(s.substr(i, len));
  i += len;
  return out;
}

}  // namespace detail

// Char mode: one token per Unicode scalar, ASCII letters lowercased.
// Word mode: split on ASCII whitespace, punctuation kept attached, case
// preserved.
inline TokenString tokenize(std::string_view text, Alphabet mode) {
  TokenString tokens;
  if (mode == Alphabet::Char) {
    size_t i = 0;
    while (i < text.size()) {
      std::string t = detail::utf8_next(text, i);
      if (t.size() == 1 && t[0] >= 'A' && t[0] <= 'Z') t[0] += 'a' - 'A';
      tokens.push_back(std::move(t));
    }
  } else {
    size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
  }
  return tokens;
}

inline std::string detokenize(const TokenString& tokens, Alphabet mode) {
  std::string out;
  const char* sep = mode == Alphabet::Char ? "" : " ";
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += sep;
    out += tokens[i];
  }
  return out;
}

// Canonical key for dedup sets: tokens joined by a separator that cannot
// appear inside a token (0x1F unit separator).
inline std::string token_key(const TokenString& tokens) {
  std::string key;
  for (const auto& t : tokens) {
    key += t;
    key += '\x1f';
  }
  return key;
}

}  // namespace robtext
