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

// UTF-8 and general string helpers shared by every module.

#ifndef MIDR_TEXT_H_
#define MIDR_TEXT_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace midr {

// Decodes the code point starting at byte `pos`. Invalid sequences decode as
// U+FFFD with length 1 so that scanning always makes progress.
char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t *len);
std::string encode_utf8(char32_t cp);

std::size_t codepoint_count(std::string_view s);

// Byte offset of every code point, plus a final entry equal to s.size().
class CodepointIndex {
 public:
  explicit CodepointIndex(std::string_view s);

  std::size_t size() const { return starts_.size() - 1; }
  std::size_t byte_at(std::size_t cp) const { return starts_.at(cp); }
  // Code point containing byte `b` (b == byte length maps to size()).
  std::size_t cp_at(std::size_t b) const;

 private:
  std::vector<std::size_t> starts_;
};

// Substring by code point range [begin, end), clipped to the string.
std::string cp_substr(std::string_view s, std::size_t begin, std::size_t end);

bool is_ascii_alpha(char32_t c);
bool is_ascii_alnum(char32_t c);
// Letters and digits in any script (ICU), plus '_'.
bool is_word_codepoint(char32_t c);
bool is_unicode_punct(char32_t c);
bool is_unicode_space(char32_t c);

std::string nfc(std::string_view s);
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix);

// HTML character references (&alpha;, &#945;, &#x3B1;). Returns std::nullopt
// when `ref` is not a known reference; `ref` includes '&' and ';'.
std::optional<std::string> decode_html_entity(std::string_view ref);
// Name of the named entity for a code point, e.g. U+03B1 -> "alpha".
std::optional<std::string> html_entity_name(char32_t cp);

// Lowercase hex digest. Supported algorithms: "md5", "sha256-128".
std::string hex_digest(std::string_view data, std::string_view algorithm = "md5");

// True if the text is a plain number such as "3", "-0.5", "1,000" or "2e-3".
bool is_numeric_text(std::string_view s);

// RFC 4180 quoting when the value needs it.
std::string csv_field(std::string_view s);

}  // namespace midr

#endif  // MIDR_TEXT_H_
