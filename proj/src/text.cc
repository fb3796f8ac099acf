// Copyright 2026 The MIDR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "midr/text.h"

#include <openssl/evp.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <regex>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace midr {

char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t *len) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    *len = 1;
    return b0;
  }
  int need = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    need = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    need = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    need = 3;
    cp = b0 & 0x07;
  } else {
    *len = 1;
    return 0xFFFD;
  }
  for (int i = 1; i <= need; ++i) {
    const int c = cont(i);
    if (c < 0) {
      *len = 1;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  *len = need + 1;
  return cp;
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len;
    decode_utf8(s, i, &len);
    i += len;
    ++n;
  }
  return n;
}

CodepointIndex::CodepointIndex(std::string_view s) {
  starts_.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size();) {
    starts_.push_back(i);
    std::size_t len;
    decode_utf8(s, i, &len);
    i += len;
  }
  starts_.push_back(s.size());
}

std::size_t CodepointIndex::cp_at(std::size_t b) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), b);
  return static_cast<std::size_t>(it - starts_.begin()) - 1;
}

std::string cp_substr(std::string_view s, std::size_t begin, std::size_t end) {
  CodepointIndex idx(s);
  begin = std::min(begin, idx.size());
  end = std::clamp(end, begin, idx.size());
  return std::string(s.substr(idx.byte_at(begin), idx.byte_at(end) - idx.byte_at(begin)));
}

bool is_ascii_alpha(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_ascii_alnum(char32_t c) { return is_ascii_alpha(c) || (c >= '0' && c <= '9'); }

bool is_word_codepoint(char32_t c) {
  if (c < 0x80) return is_ascii_alnum(c) || c == '_';
  return u_isalnum(static_cast<UChar32>(c)) != 0;
}

bool is_unicode_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)) != 0; }

bool is_unicode_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
         u_isUWhiteSpace(static_cast<UChar32>(c)) != 0;
}

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2 *norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (norm->isNormalized(in, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) return std::string(s);
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string to_lower(std::string_view s) {
  bool ascii = std::all_of(s.begin(), s.end(),
                           [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  if (ascii) {
    std::string out(s);
    for (char &c : out)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
  }
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\n' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n' || s[e - 1] == '\r'))
    --e;
  return s.substr(b, e - b);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len;
    char32_t c = decode_utf8(s, i, &len);
    if (is_unicode_space(c)) {
      pending = !out.empty();
    } else {
      if (pending) out += ' ';
      pending = false;
      out.append(s.substr(i, len));
    }
    i += len;
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len;
    char32_t c = decode_utf8(s, i, &len);
    if (is_unicode_space(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.append(s.substr(i, len));
    }
    i += len;
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char a = s[pos + i], b = prefix[i];
    if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
    if (b >= 'A' && b <= 'Z') b = static_cast<char>(b - 'A' + 'a');
    if (a != b) return false;
  }
  return true;
}

namespace {

const std::vector<std::pair<std::string_view, char32_t>> &entity_table() {
  static const std::vector<std::pair<std::string_view, char32_t>> table = {
      {"amp", U'&'},       {"lt", U'<'},         {"gt", U'>'},        {"quot", U'"'},
      {"apos", U'\''},     {"nbsp", 0x00A0},     {"thinsp", 0x2009},  {"ensp", 0x2002},
      {"emsp", 0x2003},    {"ndash", 0x2013},    {"mdash", 0x2014},   {"minus", 0x2212},
      {"times", 0x00D7},   {"divide", 0x00F7},   {"plusmn", 0x00B1},  {"middot", 0x00B7},
      {"sdot", 0x22C5},    {"prime", 0x2032},    {"Prime", 0x2033},   {"le", 0x2264},
      {"ge", 0x2265},      {"ne", 0x2260},       {"equiv", 0x2261},   {"asymp", 0x2248},
      {"isin", 0x2208},    {"notin", 0x2209},    {"infin", 0x221E},   {"part", 0x2202},
      {"nabla", 0x2207},   {"sum", 0x2211},      {"prod", 0x220F},    {"int", 0x222B},
      {"radic", 0x221A},   {"deg", 0x00B0},      {"hellip", 0x2026},  {"rarr", 0x2192},
      {"larr", 0x2190},    {"harr", 0x2194},     {"rArr", 0x21D2},    {"hArr", 0x21D4},
      {"sup2", 0x00B2},    {"sup3", 0x00B3},     {"sup1", 0x00B9},    {"frac12", 0x00BD},
      {"hbar", 0x210F},    {"ell", 0x2113},      {"alpha", 0x03B1},   {"beta", 0x03B2},
      {"gamma", 0x03B3},   {"delta", 0x03B4},    {"epsilon", 0x03B5}, {"zeta", 0x03B6},
      {"eta", 0x03B7},     {"theta", 0x03B8},    {"iota", 0x03B9},    {"kappa", 0x03BA},
      {"lambda", 0x03BB},  {"mu", 0x03BC},       {"nu", 0x03BD},      {"xi", 0x03BE},
      {"omicron", 0x03BF}, {"pi", 0x03C0},       {"rho", 0x03C1},     {"sigmaf", 0x03C2},
      {"sigma", 0x03C3},   {"tau", 0x03C4},      {"upsilon", 0x03C5}, {"phi", 0x03C6},
      {"chi", 0x03C7},     {"psi", 0x03C8},      {"omega", 0x03C9},   {"thetasym", 0x03D1},
      {"piv", 0x03D6},     {"Alpha", 0x0391},    {"Beta", 0x0392},    {"Gamma", 0x0393},
      {"Delta", 0x0394},   {"Epsilon", 0x0395},  {"Zeta", 0x0396},    {"Eta", 0x0397},
      {"Theta", 0x0398},   {"Iota", 0x0399},     {"Kappa", 0x039A},   {"Lambda", 0x039B},
      {"Mu", 0x039C},      {"Nu", 0x039D},       {"Xi", 0x039E},      {"Omicron", 0x039F},
      {"Pi", 0x03A0},      {"Rho", 0x03A1},      {"Sigma", 0x03A3},   {"Tau", 0x03A4},
      {"Upsilon", 0x03A5}, {"Phi", 0x03A6},      {"Chi", 0x03A7},     {"Psi", 0x03A8},
      {"Omega", 0x03A9},
  };
  return table;
}

}  // namespace

std::optional<std::string> decode_html_entity(std::string_view ref) {
  if (ref.size() < 3 || ref.front() != '&' || ref.back() != ';') return std::nullopt;
  std::string_view body = ref.substr(1, ref.size() - 2);
  if (body.front() == '#') {
    unsigned long value = 0;
    std::from_chars_result r{};
    if (body.size() > 1 && (body[1] == 'x' || body[1] == 'X')) {
      r = std::from_chars(body.data() + 2, body.data() + body.size(), value, 16);
    } else {
      r = std::from_chars(body.data() + 1, body.data() + body.size(), value, 10);
    }
    if (r.ec != std::errc() || r.ptr != body.data() + body.size() || value == 0 ||
        value > 0x10FFFF)
      return std::nullopt;
    return encode_utf8(static_cast<char32_t>(value));
  }
  for (const auto &[name, cp] : entity_table())
    if (name == body) return encode_utf8(cp);
  return std::nullopt;
}

std::optional<std::string> html_entity_name(char32_t cp) {
  for (const auto &[name, c] : entity_table())
    if (c == cp) return std::string(name);
  return std::nullopt;
}

std::string hex_digest(std::string_view data, std::string_view algorithm) {
  const EVP_MD *md = nullptr;
  std::size_t keep = 0;
  if (algorithm == "md5") {
    md = EVP_md5();
    keep = 16;
  } else if (algorithm == "sha256-128") {
    md = EVP_sha256();
    keep = 16;
  } else {
    throw std::invalid_argument("unknown digest algorithm: " + std::string(algorithm));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> buf{};
  unsigned int n = 0;
  EVP_Digest(data.data(), data.size(), buf.data(), &n, md, nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < keep && i < n; ++i) {
    out += kHex[buf[i] >> 4];
    out += kHex[buf[i] & 0xF];
  }
  return out;
}

bool is_numeric_text(std::string_view s) {
  static const std::regex re(R"(^[+\-]?(\d{1,3}(,\d{3})+|\d+)?(\.\d+)?([eE][+\-]?\d+)?$)");
  std::string t(trim(s));
  if (t.rfind("\u2212", 0) == 0) t = "-" + t.substr(3);
  if (t.empty() || t.find_first_of("0123456789") == std::string::npos) return false;
  return std::regex_match(t, re);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace midr
