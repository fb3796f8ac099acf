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

#include "midr/wikitext.h"

#include <algorithm>
#include <fstream>
#include <optional>
#include <utility>

#include <unicode/uchar.h>

#include "midr/errors.h"
#include "midr/text.h"

namespace midr {

// ---------------------------------------------------------------------------
// Lexicon

namespace {

struct MacroEntry {
  const char *macro;
  char32_t cp;
};

constexpr MacroEntry kGreek[] = {
    {"alpha", 0x03B1},   {"beta", 0x03B2},    {"gamma", 0x03B3},      {"delta", 0x03B4},
    {"epsilon", 0x03F5}, {"varepsilon", 0x03B5}, {"zeta", 0x03B6},    {"eta", 0x03B7},
    {"theta", 0x03B8},   {"vartheta", 0x03D1}, {"iota", 0x03B9},      {"kappa", 0x03BA},
    {"varkappa", 0x03F0}, {"lambda", 0x03BB}, {"mu", 0x03BC},         {"nu", 0x03BD},
    {"xi", 0x03BE},      {"omicron", 0x03BF}, {"pi", 0x03C0},         {"varpi", 0x03D6},
    {"rho", 0x03C1},     {"varrho", 0x03F1},  {"sigma", 0x03C3},      {"varsigma", 0x03C2},
    {"tau", 0x03C4},     {"upsilon", 0x03C5}, {"phi", 0x03D5},        {"varphi", 0x03C6},
    {"chi", 0x03C7},     {"psi", 0x03C8},     {"omega", 0x03C9},      {"Gamma", 0x0393},
    {"Delta", 0x0394},   {"Theta", 0x0398},   {"Lambda", 0x039B},     {"Xi", 0x039E},
    {"Pi", 0x03A0},      {"Sigma", 0x03A3},   {"Upsilon", 0x03A5},    {"Phi", 0x03A6},
    {"Psi", 0x03A8},     {"Omega", 0x03A9},   {"ell", 0x2113},        {"hbar", 0x210F},
    {"imath", 0x0131},   {"jmath", 0x0237},   {"aleph", 0x2135},      {"wp", 0x2118},
};

char32_t blackboard(char c) {
  switch (c) {
    case 'C': return 0x2102;
    case 'H': return 0x210D;
    case 'N': return 0x2115;
    case 'P': return 0x2119;
    case 'Q': return 0x211A;
    case 'R': return 0x211D;
    case 'Z': return 0x2124;
    default: return 0x1D538 + static_cast<char32_t>(c - 'A');
  }
}

char32_t calligraphic(char c) {
  switch (c) {
    case 'B': return 0x212C;
    case 'E': return 0x2130;
    case 'F': return 0x2131;
    case 'H': return 0x210B;
    case 'I': return 0x2110;
    case 'L': return 0x2112;
    case 'M': return 0x2133;
    case 'R': return 0x211B;
    default: return 0x1D49C + static_cast<char32_t>(c - 'A');
  }
}

const std::set<std::string, std::less<>> kStyleMacros = {
    "mathbf", "mathit", "mathsf", "mathtt", "mathfrak", "mathscr", "boldsymbol", "bm",
    "mathbb", "mathcal", "vec", "hat", "widehat", "bar", "overline", "dot", "ddot",
    "tilde", "widetilde", "check", "breve", "acute", "grave", "mathring", "underline"};

const std::set<std::string, std::less<>> kWordMacros = {"mathrm", "operatorname"};

// Macros whose argument is prose, never an identifier.
const std::set<std::string, std::less<>> kProseMacros = {"text", "textrm", "textit", "textbf",
                                                        "mbox", "textsf", "texttt", "label",
                                                        "begin", "end", "color"};

const std::set<std::string, std::less<>> kOperatorMacros = {
    "frac", "dfrac", "tfrac", "cfrac", "sqrt", "sum", "prod", "coprod", "int", "iint",
    "iiint", "oint", "lim", "limsup", "liminf", "log", "ln", "lg", "exp", "sin", "cos",
    "tan", "sec", "csc", "cot", "sinh", "cosh", "tanh", "coth", "arcsin", "arccos",
    "arctan", "max", "min", "sup", "inf", "det", "dim", "ker", "deg", "gcd", "Pr", "arg",
    "cdot", "times", "div", "pm", "mp", "ast", "star", "circ", "bullet", "oplus",
    "otimes", "wedge", "vee", "cap", "cup", "setminus", "left", "right", "big", "Big",
    "bigg", "Bigg", "bigl", "bigr", "Bigl", "Bigr", "partial", "nabla", "infty",
    "cdots", "ldots", "dots", "vdots", "ddots", "over", "binom", "choose", "mod",
    "bmod", "pmod", "to", "rightarrow", "leftarrow", "Rightarrow", "Leftarrow",
    "leftrightarrow", "Leftrightarrow", "mapsto", "implies", "iff", "forall",
    "exists", "neg", "lnot", "land", "lor", "langle", "rangle", "lfloor", "rfloor",
    "lceil", "rceil", "vert", "Vert", "mid", "parallel", "perp", "subset", "subseteq",
    "supset", "supseteq", "emptyset", "varnothing", "le", "leq", "ge", "geq", "ne",
    "neq", "equiv", "approx", "in", "notin", "ni", "triangleq", "coloneqq", "eqqcolon",
    "doteq", "stackrel", "overset", "underset", "lt", "gt", "leqslant", "geqslant",
    "defeq", "sim", "simeq", "cong", "propto", "ll", "gg", "prime", "displaystyle",
    "textstyle", "scriptstyle", "limits", "nolimits", "operatorname*", "not", "mathop",
    "overbrace", "underbrace", "hline", "cr", "tag", "quad", "qquad"};

bool is_spacing_macro(std::string_view name) {
  return name == "," || name == ";" || name == "!" || name == ":" || name == " " ||
         name == "quad" || name == "qquad" || name == "thinspace" || name == "displaystyle" ||
         name == "textstyle" || name == "scriptstyle";
}

}  // namespace

const MathLexicon &MathLexicon::builtin() {
  static const MathLexicon lexicon = [] {
    MathLexicon lx;
    for (const auto &e : kGreek) lx.add_macro(std::string("\\") + e.macro, encode_utf8(e.cp));
    for (char c = 'A'; c <= 'Z'; ++c) {
      lx.add_macro(std::string("\\mathbb{") + c + "}", encode_utf8(blackboard(c)));
      lx.add_macro(std::string("\\mathcal{") + c + "}", encode_utf8(calligraphic(c)));
    }
    for (const char *op : {"=", "<", ">", "≤", "≥", "≠", "≡", "≈",
                           "∈", "≜", "≔", "\\le", "\\leq", "\\ge", "\\geq",
                           "\\ne", "\\neq", "\\equiv", "\\approx", "\\in", "\\triangleq",
                           "\\coloneqq", "\\eqqcolon", "\\doteq", "\\stackrel", "\\lt",
                           "\\gt", "\\leqslant", "\\geqslant", "\\defeq", "&lt;", "&gt;",
                           "&le;", "&ge;", "&ne;"})
      lx.add_relation(op);
    return lx;
  }();
  return lexicon;
}

MathLexicon MathLexicon::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open math lexicon file " + path);
  MathLexicon lx = builtin();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected macro<TAB>canonical");
    std::string key = line.substr(0, tab), value = line.substr(tab + 1);
    if (key == "relation")
      lx.add_relation(value);
    else
      lx.add_macro(key, value);
  }
  return lx;
}

void MathLexicon::add_macro(std::string macro, std::string canonical) {
  canonical = nfc(canonical);
  reverse_.emplace(canonical, macro);
  macros_[std::move(macro)] = std::move(canonical);
}

void MathLexicon::add_relation(std::string op) { relations_.insert(std::move(op)); }

const std::string *MathLexicon::lookup(std::string_view macro) const {
  auto it = macros_.find(macro);
  return it == macros_.end() ? nullptr : &it->second;
}

const std::string *MathLexicon::macro_for(std::string_view canonical) const {
  auto it = reverse_.find(canonical);
  return it == reverse_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Identifier parsing

namespace {

std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      ++i;
      continue;
    }
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

std::string wrap_script(const std::string &s) {
  return codepoint_count(s) == 1 ? s : "{" + s + "}";
}

// Reads a macro name starting at s[i] == '\\'. Returns the name and advances i.
std::string read_macro(std::string_view s, std::size_t &i) {
  std::size_t j = i + 1;
  if (j < s.size() && is_ascii_alpha(static_cast<unsigned char>(s[j]))) {
    while (j < s.size() && is_ascii_alpha(static_cast<unsigned char>(s[j]))) ++j;
    if (j < s.size() && s[j] == '*') ++j;
  } else if (j < s.size()) {
    ++j;
  }
  std::string name(s.substr(i + 1, j - i - 1));
  i = j;
  return name;
}

void skip_spaces(std::string_view s, std::size_t &i) {
  while (i < s.size()) {
    if (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '~') {
      ++i;
    } else if (s[i] == '\\' && i + 1 < s.size()) {
      std::size_t j = i;
      std::string name = read_macro(s, j);
      if (!is_spacing_macro(name)) return;
      i = j;
    } else {
      return;
    }
  }
}

// Reads a macro argument: a braced group (returned without braces) or a
// single token. Advances i past it.
std::optional<std::string> read_argument(std::string_view s, std::size_t &i) {
  skip_spaces(s, i);
  if (i >= s.size()) return std::nullopt;
  if (s[i] == '{') {
    std::size_t close = match_brace(s, i);
    if (close == std::string_view::npos) return std::nullopt;
    std::string arg(s.substr(i + 1, close - i - 1));
    i = close + 1;
    return arg;
  }
  if (s[i] == '\\') {
    std::size_t start = i;
    read_macro(s, i);
    return std::string(s.substr(start, i - start));
  }
  std::size_t len;
  decode_utf8(s, i, &len);
  std::string arg(s.substr(i, len));
  i += len;
  return arg;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

// Turns HTML/Unicode spellings into LaTeX-ish syntax the parser understands.
std::string preprocess_encoding(std::string_view token) {
  std::string s(trim(token));
  // {{math|...}} and {{mvar|...}} wrappers, anywhere in the token.
  for (;;) {
    std::size_t best = std::string::npos, name_len = 0;
    for (std::string_view name : {"{{math|", "{{mvar|", "{{Math|", "{{Mvar|"}) {
      auto p = s.find(name);
      if (p < best) best = p, name_len = name.size();
    }
    if (best == std::string::npos) break;
    int depth = 1;
    std::size_t j = best + name_len;
    while (j + 1 < s.size()) {
      if (s.compare(j, 2, "{{") == 0) {
        ++depth;
        j += 2;
      } else if (s.compare(j, 2, "}}") == 0) {
        if (--depth == 0) break;
        j += 2;
      } else {
        ++j;
      }
    }
    if (depth != 0) break;
    std::string inner(trim(std::string_view(s).substr(best + name_len, j - best - name_len)));
    if (inner.rfind("1=", 0) == 0) inner = inner.substr(2);
    s = s.substr(0, best) + inner + s.substr(j + 2);
  }
  // Character references.
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      auto semi = s.find(';', i);
      if (semi != std::string::npos && semi - i <= 10) {
        if (auto dec = decode_html_entity(std::string_view(s).substr(i, semi - i + 1))) {
          out += *dec;
          i = semi + 1;
          continue;
        }
      }
    }
    out += s[i++];
  }
  s = std::move(out);
  s = replace_all(s, "<b>", "'''");
  s = replace_all(s, "</b>", "'''");
  // '''x''' is bold upright, same as \mathbf{x}
  for (std::size_t p; (p = s.find("'''")) != std::string::npos;) {
    auto q = s.find("'''", p + 3);
    if (q == std::string::npos) {
      s.erase(p, 3);
      continue;
    }
    std::string inner = replace_all(s.substr(p + 3, q - p - 3), "''", "");
    s = s.substr(0, p) + "\\mathbf{" + inner + "}" + s.substr(q + 3);
  }
  s = replace_all(s, "''", "");
  for (std::string_view tag : {"<i>", "</i>", "<var>", "</var>", "<em>", "</em>", "</span>"})
    s = replace_all(s, tag, "");
  for (std::size_t p; (p = s.find("<span")) != std::string::npos;) {
    auto close = s.find('>', p);
    if (close == std::string::npos) break;
    s.erase(p, close - p + 1);
  }
  s = replace_all(s, "<sub>", "_{");
  s = replace_all(s, "</sub>", "}");
  s = replace_all(s, "<sup>", "^{");
  s = replace_all(s, "</sup>", "}");
  // Unicode sub/superscript characters.
  std::string res;
  bool prev_sub = false;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len;
    char32_t c = decode_utf8(s, i, &len);
    bool sub_char = (c >= 0x2080 && c <= 0x2089) || (c >= 0x2090 && c <= 0x2093);
    if (sub_char) {
      static constexpr char kSubs[] = {'a', 'e', 'o', 'x'};
      char ch = c <= 0x2089 ? static_cast<char>('0' + (c - 0x2080)) : kSubs[c - 0x2090];
      if (prev_sub) res.insert(res.size() - 1, 1, ch);
      else res += std::string("_{") + ch + "}";
    } else if (c == 0x2070 || (c >= 0x2074 && c <= 0x2079)) {
      res += "^{" + std::string(1, static_cast<char>('0' + (c - 0x2070))) + "}";
    } else if (c == 0x00B9 || c == 0x00B2 || c == 0x00B3) {
      res += "^{" + std::string(1, c == 0x00B9 ? '1' : (c == 0x00B2 ? '2' : '3')) + "}";
    } else if (c == 0x207F || c == 0x2071) {
      res += std::string("^{") + (c == 0x207F ? 'n' : 'i') + "}";
    } else if (c == 0x2032) {
      res += "'";
    } else if (c == 0x00A0 || c == 0x2009 || c == 0x200A) {
      res += ' ';
    } else {
      res.append(s, i, len);
    }
    prev_sub = sub_char;
    i += len;
  }
  return res;
}

std::string canonical_script(std::string_view content, const MathLexicon &lexicon);

std::optional<IdentifierParts> try_parse(std::string_view s, const MathLexicon &lexicon,
                                         std::string *error);

std::string canonical_script(std::string_view content, const MathLexicon &lexicon) {
  std::string error;
  if (auto parts = try_parse(content, lexicon, &error)) return parts->canonical();
  // Not a single identifier: keep structure, map known macros, drop spacing.
  std::string out;
  std::string_view s = content;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '\\') {
      std::size_t j = i;
      std::string name = read_macro(s, j);
      if (is_spacing_macro(name)) {
        i = j;
        continue;
      }
      if (kProseMacros.count(name) || kWordMacros.count(name)) {
        std::size_t k = j;
        if (auto arg = read_argument(s, k)) {
          out += "\\" + name + "{" + collapse_whitespace(*arg) + "}";
          i = k;
          continue;
        }
      }
      if (const std::string *m = lexicon.lookup("\\" + name)) {
        out += *m;
      } else {
        out += "\\" + name;
        // Keep a separating space if the next char would glue onto the name.
        if (j < s.size() && is_ascii_alpha(static_cast<unsigned char>(s[j]))) out += ' ';
      }
      i = j;
    } else if (s[i] == ' ' || s[i] == '\t' || s[i] == '\n') {
      ++i;
    } else {
      out += s[i++];
    }
  }
  return out;
}

std::optional<IdentifierParts> try_parse(std::string_view s, const MathLexicon &lexicon,
                                         std::string *error) {
  IdentifierParts parts;
  std::size_t i = 0;
  skip_spaces(s, i);
  if (i >= s.size()) {
    *error = "empty identifier";
    return std::nullopt;
  }
  if (s[i] == '{') {
    std::size_t close = match_brace(s, i);
    if (close == std::string_view::npos) {
      *error = "unbalanced braces";
      return std::nullopt;
    }
    auto inner = try_parse(s.substr(i + 1, close - i - 1), lexicon, error);
    if (!inner) return std::nullopt;
    parts = *inner;
    i = close + 1;
  } else if (s[i] == '\\') {
    std::size_t j = i;
    std::string name = read_macro(s, j);
    if (kStyleMacros.count(name) || kWordMacros.count(name)) {
      std::size_t k = j;
      auto arg = read_argument(s, k);
      if (!arg) {
        *error = "macro \\" + name + " without argument";
        return std::nullopt;
      }
      std::string key = "\\" + name + "{" + std::string(trim(*arg)) + "}";
      if (const std::string *m = lexicon.lookup(key)) {
        parts.base = *m;
      } else if (kWordMacros.count(name)) {
        parts.base = "\\" + name + "{" + collapse_whitespace(*arg) + "}";
      } else {
        auto inner = try_parse(*arg, lexicon, error);
        if (!inner) return std::nullopt;
        parts.base = "\\" + name + "{" + inner->canonical() + "}";
      }
      i = k;
    } else if (const std::string *m = lexicon.lookup("\\" + name)) {
      parts.base = *m;
      i = j;
    } else if (kOperatorMacros.count(name) || kProseMacros.count(name) ||
               lexicon.is_relation("\\" + name) || name.size() == 1) {
      *error = "operator \\" + name;
      return std::nullopt;
    } else {
      parts.base = "\\" + name;  // unknown macro: passes through verbatim
      i = j;
    }
  } else {
    std::size_t len;
    char32_t c = decode_utf8(s, i, &len);
    if (!(is_ascii_alpha(c) || (c >= 0x80 && u_isalpha(static_cast<UChar32>(c))))) {
      *error = "'" + std::string(s.substr(i, len)) + "' cannot start an identifier";
      return std::nullopt;
    }
    parts.base = std::string(s.substr(i, len));
    i += len;
  }
  for (;;) {
    skip_spaces(s, i);
    if (i >= s.size()) break;
    if (s[i] == '\'') {
      parts.primes += '\'';
      ++i;
      continue;
    }
    if (s[i] == '_' || s[i] == '^') {
      char kind = s[i++];
      auto arg = read_argument(s, i);
      if (!arg || trim(*arg).empty()) {
        *error = std::string("empty ") + (kind == '_' ? "subscript" : "superscript");
        return std::nullopt;
      }
      std::string canon = canonical_script(*arg, lexicon);
      std::string &slot = kind == '_' ? parts.sub : parts.sup;
      if (!slot.empty()) {
        *error = "double script";
        return std::nullopt;
      }
      slot = std::move(canon);
      continue;
    }
    *error = "unexpected '" + std::string(s.substr(i, 1)) + "'";
    return std::nullopt;
  }
  return parts;
}

}  // namespace

std::string IdentifierParts::canonical() const {
  std::string out = base;
  if (!sub.empty()) out += "_" + wrap_script(sub);
  if (!sup.empty()) out += "^" + wrap_script(sup);
  out += primes;
  return nfc(out);
}

IdentifierParts parse_identifier(std::string_view token, const MathLexicon &lexicon) {
  std::string pre = preprocess_encoding(token);
  std::string error;
  auto parts = try_parse(pre, lexicon, &error);
  if (!parts)
    throw NotAnIdentifier("not a single identifier: '" + std::string(token) + "' (" + error + ")");
  parts->base = nfc(parts->base);
  return *parts;
}

std::string normalize_identifier(std::string_view token, const MathLexicon &lexicon) {
  return parse_identifier(token, lexicon).canonical();
}

// ---------------------------------------------------------------------------
// References

namespace {

// End of an HTML-ish tag starting at s[open] == '<', honoring quoted
// attribute values. Returns the index of '>' or npos.
std::size_t tag_end(std::string_view s, std::size_t open) {
  char quote = 0;
  for (std::size_t i = open + 1; i < s.size(); ++i) {
    if (quote) {
      if (s[i] == quote) quote = 0;
    } else if (s[i] == '"' || s[i] == '\'') {
      // Only treat as a quote when it opens an attribute value.
      if (s[i - 1] == '=') quote = s[i];
    } else if (s[i] == '>') {
      return i;
    } else if (s[i] == '<' || s[i] == '\n') {
      if (s[i] == '<') return std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

bool is_tag_open(std::string_view s, std::size_t i, std::string_view name) {
  if (s[i] != '<' || !starts_with_ci(s, i + 1, name)) return false;
  std::size_t j = i + 1 + name.size();
  return j < s.size() && (s[j] == '>' || s[j] == '/' || s[j] == ' ' || s[j] == '\t' ||
                          s[j] == '\n');
}

// Position of "</name" (case-insensitive) at or after `from`.
std::size_t find_close_tag(std::string_view s, std::size_t from, std::string_view name) {
  for (std::size_t i = s.find("</", from); i != std::string_view::npos; i = s.find("</", i + 1)) {
    if (starts_with_ci(s, i + 2, name)) {
      std::size_t j = i + 2 + name.size();
      if (j < s.size() && (s[j] == '>' || s[j] == ' ')) return i;
    }
  }
  return std::string_view::npos;
}

void append_verbatim(MappedText &out, std::string_view s, std::size_t src) {
  out.text.append(s);
  for (std::size_t k = 0; k < s.size(); ++k) out.source.push_back(src + k);
}

void append_replacement(MappedText &out, std::string_view s, std::size_t src) {
  out.text.append(s);
  out.source.insert(out.source.end(), s.size(), src);
}

}  // namespace

MappedText strip_inline_refs(std::string_view wikitext) {
  MappedText out;
  out.text.reserve(wikitext.size());
  out.source.reserve(wikitext.size() + 1);
  std::size_t i = 0, copied = 0;
  while (i < wikitext.size()) {
    std::size_t lt = wikitext.find('<', i);
    if (lt == std::string_view::npos) break;
    if (!is_tag_open(wikitext, lt, "ref")) {
      i = lt + 1;
      continue;
    }
    std::size_t gt = tag_end(wikitext, lt);
    if (gt == std::string_view::npos) throw MalformedMarkup("unterminated <ref> tag", lt);
    std::size_t stop;
    if (wikitext[gt - 1] == '/') {
      stop = gt + 1;
    } else {
      std::size_t close = find_close_tag(wikitext, gt + 1, "ref");
      if (close == std::string_view::npos)
        throw MalformedMarkup("unterminated <ref> element", lt);
      std::size_t close_gt = wikitext.find('>', close);
      if (close_gt == std::string_view::npos)
        throw MalformedMarkup("unterminated </ref> tag", close);
      stop = close_gt + 1;
    }
    append_verbatim(out, wikitext.substr(copied, lt - copied), copied);
    copied = i = stop;
  }
  append_verbatim(out, wikitext.substr(copied), copied);
  out.source.push_back(wikitext.size());
  return out;
}

// ---------------------------------------------------------------------------
// Math segments

const char *math_kind_name(MathKind kind) {
  switch (kind) {
    case MathKind::kFormula: return "formula";
    case MathKind::kExpression: return "expression";
    case MathKind::kLoneIdentifier: return "lone_identifier";
  }
  return "?";
}

std::vector<std::pair<std::size_t, std::size_t>> math_elements(std::string_view s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = s.find('<'); i != std::string_view::npos; i = s.find('<', i)) {
    if (starts_with_ci(s, i, "<!--")) {
      std::size_t e = s.find("-->", i + 4);
      i = e == std::string_view::npos ? s.size() : e + 3;
      continue;
    }
    if (is_tag_open(s, i, "nowiki")) {
      std::size_t close = find_close_tag(s, i + 1, "nowiki");
      i = close == std::string_view::npos ? i + 1 : close + 1;
      continue;
    }
    if (!is_tag_open(s, i, "math")) {
      ++i;
      continue;
    }
    std::size_t gt = tag_end(s, i);
    if (gt == std::string_view::npos) throw MalformedMarkup("unterminated <math> tag", i);
    if (s[gt - 1] == '/') {
      i = gt + 1;
      continue;
    }
    std::size_t close = find_close_tag(s, gt + 1, "math");
    if (close == std::string_view::npos) throw MalformedMarkup("unterminated <math> element", i);
    std::size_t close_gt = s.find('>', close);
    out.emplace_back(i, close_gt + 1);
    i = close_gt + 1;
  }
  return out;
}

bool has_top_level_relation(std::string_view body, const MathLexicon &lexicon) {
  int depth = 0;
  for (std::size_t i = 0; i < body.size();) {
    char c = body[i];
    if (c == '\\') {
      std::size_t j = i;
      std::string name = read_macro(body, j);
      if (name == "{" || name == "}") {
        i = j;
        continue;
      }
      if (depth == 0 && lexicon.is_relation("\\" + name)) return true;
      i = j;
      continue;
    }
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      --depth;
    } else if (depth == 0) {
      if (c == '&') {
        auto semi = body.find(';', i);
        if (semi != std::string_view::npos && lexicon.is_relation(body.substr(i, semi - i + 1)))
          return true;
      }
      std::size_t len;
      decode_utf8(body, i, &len);
      if (lexicon.is_relation(body.substr(i, len))) return true;
      i += len;
      continue;
    }
    ++i;
  }
  return false;
}

std::vector<MathSegment> tokenize_math_segments(std::string_view wikitext,
                                                std::span<const CanonicalIdentifier> targets,
                                                MathOrdinals base, const MathLexicon &lexicon) {
  std::vector<MathSegment> out;
  int formulas = base.formula, expressions = base.expression, lones = 0;
  for (auto [start, end] : math_elements(wikitext)) {
    MathSegment seg;
    seg.start = start;
    seg.end = end;
    seg.body_begin = wikitext.find('>', start) + 1;
    seg.body_end = wikitext.rfind('<', end - 1);
    seg.body = std::string(wikitext.substr(seg.body_begin, seg.body_end - seg.body_begin));
    std::optional<std::string> canon;
    if (!targets.empty()) {
      try {
        canon = normalize_identifier(seg.body, lexicon);
      } catch (const NotAnIdentifier &) {
      }
    }
    bool lone = false;
    if (canon) {
      for (const auto &t : targets)
        if (t.canonical == *canon) lone = true;
    }
    if (lone) {
      seg.kind = MathKind::kLoneIdentifier;
      seg.ordinal = ++lones;
      seg.canonical = *canon;
    } else if (has_top_level_relation(seg.body, lexicon)) {
      seg.kind = MathKind::kFormula;
      seg.ordinal = ++formulas;
    } else {
      seg.kind = MathKind::kExpression;
      seg.ordinal = ++expressions;
    }
    out.push_back(std::move(seg));
  }
  return out;
}

MappedText replace_math_with_placeholders(std::string_view wikitext,
                                          std::span<const MathSegment> segments,
                                          std::span<const CanonicalIdentifier> targets) {
  std::set<std::pair<int, int>> seen;
  MappedText out;
  std::size_t copied = 0;
  for (const MathSegment &seg : segments) {
    if (seg.start < copied || seg.end > wikitext.size())
      throw ConsistencyError("math segments overlap or exceed the text");
    if (!seen.emplace(static_cast<int>(seg.kind), seg.ordinal).second)
      throw ConsistencyError(std::string("duplicate ") + math_kind_name(seg.kind) + " ordinal " +
                             std::to_string(seg.ordinal));
    append_verbatim(out, wikitext.substr(copied, seg.start - copied), copied);
    std::string replacement;
    switch (seg.kind) {
      case MathKind::kFormula:
        replacement = "formula" + std::to_string(seg.ordinal);
        break;
      case MathKind::kExpression:
        replacement = "expression" + std::to_string(seg.ordinal);
        break;
      case MathKind::kLoneIdentifier: {
        bool known = std::any_of(targets.begin(), targets.end(), [&](const auto &t) {
          return t.canonical == seg.canonical;
        });
        if (!known)
          throw ConsistencyError("lone identifier segment without target: " + seg.canonical);
        replacement = seg.canonical;
        break;
      }
    }
    append_replacement(out, replacement, seg.start);
    copied = seg.end;
  }
  append_verbatim(out, wikitext.substr(copied), copied);
  out.source.push_back(wikitext.size());
  return out;
}

// ---------------------------------------------------------------------------
// Identifier tokens inside math

std::vector<MathToken> scan_math_identifiers(std::string_view body, const MathLexicon &lexicon) {
  std::vector<MathToken> out;
  std::size_t i = 0;
  while (i < body.size()) {
    std::size_t atom_begin = i;
    bool atom = false;
    if (body[i] == '\\') {
      std::size_t j = i;
      std::string name = read_macro(body, j);
      if (kProseMacros.count(name)) {
        std::size_t k = j;
        if (name == "begin" || name == "end" || name == "text" || name == "mbox" ||
            name.rfind("text", 0) == 0 || name == "label" || name == "color")
          read_argument(body, k);
        i = k;
        continue;
      }
      if (kStyleMacros.count(name) || kWordMacros.count(name)) {
        std::size_t k = j;
        if (read_argument(body, k)) {
          i = k;
          atom = true;
        } else {
          i = j;
        }
      } else if (lexicon.lookup("\\" + name)) {
        i = j;
        atom = true;
      } else {
        i = j;
        continue;
      }
    } else {
      std::size_t len;
      char32_t c = decode_utf8(body, i, &len);
      if (is_ascii_alpha(c) || (c >= 0x80 && u_isalpha(static_cast<UChar32>(c)))) {
        i += len;
        atom = true;
      } else if (c == '_' || c == '^') {
        // Script on a non-identifier (e.g. a closing paren): skip its argument.
        ++i;
        read_argument(body, i);
        continue;
      } else {
        i += len;
        continue;
      }
    }
    if (!atom) continue;
    // Scripts and primes attached to the atom.
    std::size_t end_nosup = i;
    bool seen_sup = false;
    for (;;) {
      std::size_t k = i;
      while (k < body.size() && body[k] == ' ') ++k;
      if (k < body.size() && body[k] == '\'') {
        i = k + 1;
        if (!seen_sup) end_nosup = i;
        continue;
      }
      if (k < body.size() && (body[k] == '_' || body[k] == '^')) {
        char kind = body[k];
        ++k;
        if (!read_argument(body, k)) break;
        i = k;
        if (kind == '^') seen_sup = true;
        else if (!seen_sup) end_nosup = i;
        continue;
      }
      break;
    }
    MathToken tok;
    tok.begin = atom_begin;
    tok.end = i;
    tok.end_nosup = end_nosup;
    try {
      tok.canonical = normalize_identifier(body.substr(tok.begin, tok.end - tok.begin), lexicon);
      tok.canonical_nosup =
          seen_sup ? normalize_identifier(body.substr(tok.begin, end_nosup - tok.begin), lexicon)
                   : tok.canonical;
    } catch (const NotAnIdentifier &) {
      continue;
    }
    out.push_back(std::move(tok));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identifier variants and matching

namespace {

bool single_codepoint(std::string_view s) { return !s.empty() && codepoint_count(s) == 1; }

std::vector<std::string> script_forms(const std::string &script) {
  std::vector<std::string> forms;
  if (script.empty()) return forms;
  forms.push_back(script);
  if (single_codepoint(script)) {
    std::size_t len;
    char32_t c = decode_utf8(script, 0, &len);
    if (c >= 0x80)
      if (auto name = html_entity_name(c)) forms.push_back("&" + *name + ";");
  }
  return forms;
}

bool is_plain_script(const std::string &script) {
  return !script.empty() && script.find_first_of("\\{}") == std::string::npos;
}

}  // namespace

CanonicalIdentifier make_identifier(std::string_view any_encoding, const MathLexicon &lexicon) {
  IdentifierParts parts = parse_identifier(any_encoding, lexicon);
  CanonicalIdentifier id;
  id.canonical = parts.canonical();
  id.variants.insert(id.canonical);

  std::vector<std::string> latex_bases = {parts.base};
  if (const std::string *macro = lexicon.macro_for(parts.base)) latex_bases.push_back(*macro);
  auto latex_scripts = [](const std::string &marker, const std::string &s) {
    std::vector<std::string> v;
    if (s.empty()) {
      v.emplace_back();
    } else {
      v.push_back(marker + wrap_script(s));
      v.push_back(marker + "{" + s + "}");
    }
    return v;
  };
  for (const auto &b : latex_bases)
    for (const auto &sub : latex_scripts("_", parts.sub))
      for (const auto &sup : latex_scripts("^", parts.sup))
        id.variants.insert(b + sub + sup + parts.primes);

  // Wikitext spellings used outside <math>.
  if (!parts.primes.empty()) return id;
  std::vector<std::string> bases;
  std::vector<std::string> italic_bases;
  std::size_t len = 0;
  char32_t c0 = parts.base.empty() ? 0 : decode_utf8(parts.base, 0, &len);
  if (single_codepoint(parts.base) && is_ascii_alpha(c0)) {
    italic_bases.push_back(parts.base);
    bases.push_back("{{mvar|" + parts.base + "}}");
  } else if (single_codepoint(parts.base)) {
    bases.push_back(parts.base);
    bases.push_back("{{mvar|" + parts.base + "}}");
    italic_bases.push_back(parts.base);
    if (auto name = html_entity_name(c0)) {
      std::string ent = "&" + *name + ";";
      bases.push_back(ent);
      bases.push_back("{{mvar|" + ent + "}}");
      italic_bases.push_back(ent);
    }
  } else if (parts.base.rfind("\\mathbf{", 0) == 0 && parts.base.size() == 10) {
    bases.push_back("'''" + parts.base.substr(8, 1) + "'''");
  }
  if ((!parts.sub.empty() && !is_plain_script(parts.sub)) ||
      (!parts.sup.empty() && !is_plain_script(parts.sup)))
    return id;
  auto html_scripts = [](const std::string &tag, const std::string &s) {
    std::vector<std::string> v;
    if (s.empty()) {
      v.emplace_back();
    } else {
      for (const auto &f : script_forms(s)) v.push_back("<" + tag + ">" + f + "</" + tag + ">");
    }
    return v;
  };
  for (const auto &sub : html_scripts("sub", parts.sub)) {
    for (const auto &sup : html_scripts("sup", parts.sup)) {
      for (const auto &b : bases) id.variants.insert(b + sub + sup);
      for (const auto &b : italic_bases) {
        id.variants.insert("''" + b + "''" + sub + sup);
        if (!sub.empty() || !sup.empty()) id.variants.insert("''" + b + sub + sup + "''");
      }
    }
  }
  return id;
}

IdentifierMatcher::IdentifierMatcher(CanonicalIdentifier target, const MathLexicon &lexicon)
    : target_(std::move(target)), lexicon_(&lexicon) {
  for (const auto &v : target_.variants) {
    // LaTeX spellings are matched token-wise inside math only.
    if (v.find('\\') != std::string::npos || v.find('_') != std::string::npos ||
        v.find('^') != std::string::npos)
      continue;
    // A bare ASCII letter outside math is prose ("a", "I"), not an identifier.
    if (single_codepoint(v) && is_ascii_alpha(static_cast<unsigned char>(v[0]))) continue;
    text_variants_.push_back(v);
  }
  std::sort(text_variants_.begin(), text_variants_.end(), [](const auto &a, const auto &b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
}

std::vector<IdentifierMatch> IdentifierMatcher::find_all(std::string_view text) const {
  std::vector<IdentifierMatch> out;
  std::vector<bool> blocked(text.size() + 1, false);
  for (auto [start, end] : math_elements(text)) {
    std::fill(blocked.begin() + start, blocked.begin() + end, true);
    std::size_t body_begin = text.find('>', start) + 1;
    std::size_t body_end = text.rfind('<', end - 1);
    std::string_view body = text.substr(body_begin, body_end - body_begin);
    for (const MathToken &tok : scan_math_identifiers(body, *lexicon_)) {
      std::size_t tok_end = 0;
      if (tok.canonical == target_.canonical)
        tok_end = tok.end;
      else if (tok.canonical_nosup == target_.canonical)
        tok_end = tok.end_nosup;
      else
        continue;
      out.push_back({body_begin + tok.begin, body_begin + tok_end,
                     std::string(body.substr(tok.begin, tok_end - tok.begin)), true});
    }
  }
  for (std::size_t p = text.find("<!--"); p != std::string_view::npos;
       p = text.find("<!--", p + 4)) {
    std::size_t e = text.find("-->", p + 4);
    e = e == std::string_view::npos ? text.size() : e + 3;
    std::fill(blocked.begin() + p, blocked.begin() + e, true);
  }

  auto word_before = [&](std::size_t pos) {
    if (pos == 0) return false;
    std::size_t b = pos - 1;
    while (b > 0 && (static_cast<unsigned char>(text[b]) & 0xC0) == 0x80) --b;
    std::size_t len;
    return is_word_codepoint(decode_utf8(text, b, &len));
  };
  auto word_after = [&](std::size_t pos) {
    if (pos >= text.size()) return false;
    std::size_t len;
    return is_word_codepoint(decode_utf8(text, pos, &len));
  };
  for (const std::string &v : text_variants_) {
    std::size_t first_len, last_len;
    bool starts_word = is_word_codepoint(decode_utf8(v, 0, &first_len));
    std::size_t last = v.size() - 1;
    while (last > 0 && (static_cast<unsigned char>(v[last]) & 0xC0) == 0x80) --last;
    bool ends_word = is_word_codepoint(decode_utf8(v, last, &last_len));
    bool has_sub = v.find("<sub>") != std::string::npos;
    for (std::size_t p = text.find(v); p != std::string_view::npos; p = text.find(v, p + 1)) {
      std::size_t e = p + v.size();
      if (std::any_of(blocked.begin() + p, blocked.begin() + e, [](bool b) { return b; }))
        continue;
      if (starts_word && word_before(p)) continue;
      if (ends_word && word_after(e)) continue;
      if (!has_sub && (starts_with_ci(text, e, "<sub>") || (e < text.size() && text[e] == '_')))
        continue;
      std::fill(blocked.begin() + p, blocked.begin() + e, true);
      out.push_back({p, e, v, false});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto &a, const auto &b) { return a.begin < b.begin; });
  return out;
}

// ---------------------------------------------------------------------------
// Markup structure helpers

namespace {

// Index one past the "}}" closing the template opened at s[open].
std::size_t match_template(std::string_view s, std::size_t open, std::size_t limit) {
  int depth = 0;
  for (std::size_t i = open; i + 1 < limit; ++i) {
    if (s[i] == '{' && s[i + 1] == '{') {
      ++depth;
      ++i;
    } else if (s[i] == '}' && s[i + 1] == '}') {
      --depth;
      ++i;
      if (depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

// Index one past the "]]" closing the link opened at s[open].
std::size_t match_link(std::string_view s, std::size_t open, std::size_t limit) {
  int depth = 0;
  for (std::size_t i = open; i + 1 < limit; ++i) {
    if (s[i] == '[' && s[i + 1] == '[') {
      ++depth;
      ++i;
    } else if (s[i] == ']' && s[i + 1] == ']') {
      --depth;
      ++i;
      if (depth == 0) return i + 1;
    } else if (s[i] == '\n' && s[i + 1] == '\n') {
      return std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

bool line_starts_with(std::string_view s, std::size_t line_begin, std::string_view prefix) {
  std::size_t i = line_begin;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i, prefix.size()) == prefix;
}

// s[open] starts a "{|" line. Returns the end of the matching "|}" line
// (index of its '\n', or the end of the text).
std::size_t match_table(std::string_view s, std::size_t open, std::size_t limit) {
  int depth = 0;
  std::size_t line = open;
  while (line < limit) {
    std::size_t le = s.find('\n', line);
    if (le == std::string_view::npos || le > limit) le = limit;
    if (line_starts_with(s, line, "{|")) ++depth;
    if (line_starts_with(s, line, "|}") && --depth == 0) return le;
    line = le + 1;
  }
  return limit;
}

bool is_url_start(std::string_view s, std::size_t i) {
  for (std::string_view scheme : {"http://", "https://", "ftp://", "//"})
    if (s.substr(i, scheme.size()) == scheme) return true;
  return false;
}

// Splits [b, e) on '|' that are not nested in [[..]] or {{..}}.
std::vector<std::pair<std::size_t, std::size_t>> split_top_level(std::string_view s,
                                                                 std::size_t b, std::size_t e,
                                                                 std::string_view sep) {
  std::vector<std::pair<std::size_t, std::size_t>> parts;
  int depth = 0;
  std::size_t start = b;
  for (std::size_t i = b; i < e; ++i) {
    if (i + 1 < e && ((s[i] == '[' && s[i + 1] == '[') || (s[i] == '{' && s[i + 1] == '{'))) {
      ++depth;
      ++i;
    } else if (i + 1 < e &&
               ((s[i] == ']' && s[i + 1] == ']') || (s[i] == '}' && s[i + 1] == '}'))) {
      --depth;
      ++i;
    } else if (depth == 0 && s.substr(i, sep.size()) == sep && i + sep.size() <= e) {
      parts.emplace_back(start, i);
      start = i + sep.size();
      i += sep.size() - 1;
    }
  }
  parts.emplace_back(start, e);
  return parts;
}

struct SurfaceMatch {
  std::size_t end;
  std::string canonical;
};

class SurfaceRenderer {
 public:
  SurfaceRenderer(std::string_view src, const std::vector<MathSegment> &segments,
                  std::map<std::size_t, SurfaceMatch> matches)
      : src_(src), matches_(std::move(matches)) {
    for (const auto &seg : segments) segments_.emplace(seg.start, &seg);
  }

  MappedText run() {
    render(0, src_.size(), true);
    out_.source.push_back(src_.size());
    return std::move(out_);
  }

 private:
  void emit(std::string_view s, std::size_t src) { append_verbatim(out_, s, src); }
  void emit_replacement(std::string_view s, std::size_t src) { append_replacement(out_, s, src); }

  void render(std::size_t b, std::size_t e, bool line_markup) {
    std::size_t i = b;
    bool line_start = line_markup && (i == 0 || src_[i - 1] == '\n');
    while (i < e) {
      if (line_start) {
        line_start = false;
        std::size_t le = src_.find('\n', i);
        if (le == std::string_view::npos || le > e) le = e;
        if (src_[i] == '=') {
          std::size_t lead = 0;
          while (i + lead < le && src_[i + lead] == '=') ++lead;
          std::size_t tail = le;
          while (tail > i + lead && (src_[tail - 1] == ' ' || src_[tail - 1] == '\t')) --tail;
          std::size_t trail = 0;
          while (tail - trail > i + lead && src_[tail - trail - 1] == '=') ++trail;
          if (trail > 0 && tail - trail > i + lead) {
            std::size_t ib = i + lead, ie = tail - trail;
            while (ib < ie && src_[ib] == ' ') ++ib;
            while (ie > ib && src_[ie - 1] == ' ') --ie;
            render(ib, ie, false);
            i = le;
            continue;
          }
        }
        if (line_starts_with(src_, i, "{|")) {
          std::size_t te = match_table(src_, i, e);
          render_table(i, te);
          i = te;
          continue;
        }
        std::size_t j = i;
        while (j < le && (src_[j] == '*' || src_[j] == '#' || src_[j] == ':' || src_[j] == ';'))
          ++j;
        if (j > i) {
          while (j < le && (src_[j] == ' ' || src_[j] == '\t')) ++j;
          i = j;
          continue;
        }
        if (src_.substr(i, 4) == "----") {
          i = le;
          continue;
        }
      }
      char c = src_[i];
      if (c == '\n') {
        emit("\n", i);
        ++i;
        line_start = line_markup;
        continue;
      }
      if (auto seg = segments_.find(i); seg != segments_.end()) {
        const MathSegment &m = *seg->second;
        std::string text = m.kind == MathKind::kLoneIdentifier
                               ? m.canonical
                               : std::string(math_kind_name(m.kind)) + std::to_string(m.ordinal);
        emit_replacement(text, i);
        i = m.end;
        continue;
      }
      if (auto mt = matches_.find(i); mt != matches_.end()) {
        emit_replacement(mt->second.canonical, i);
        i = mt->second.end;
        continue;
      }
      if (src_.substr(i, 4) == "<!--") {
        std::size_t ce = src_.find("-->", i + 4);
        i = ce == std::string_view::npos ? e : std::min(e, ce + 3);
        continue;
      }
      if (c == '{' && i + 1 < e && src_[i + 1] == '{') {
        std::size_t te = match_template(src_, i, e);
        if (te == std::string_view::npos) throw MalformedMarkup("unterminated template", i);
        render_template(i, te);
        i = te;
        continue;
      }
      if (c == '[' && i + 1 < e && src_[i + 1] == '[') {
        std::size_t le = match_link(src_, i, e);
        if (le == std::string_view::npos) throw MalformedMarkup("unterminated wikilink", i);
        render_link(i, le);
        i = le;
        continue;
      }
      if (c == '[' && is_url_start(src_, i + 1)) {
        std::size_t close = src_.find(']', i);
        std::size_t nl = src_.find('\n', i);
        if (close != std::string_view::npos && close < e && (nl == std::string_view::npos || close < nl)) {
          std::size_t sp = src_.find(' ', i);
          if (sp != std::string_view::npos && sp < close) render(sp + 1, close, false);
          i = close + 1;
          continue;
        }
      }
      if (c == '\'' && i + 1 < e && src_[i + 1] == '\'') {
        while (i < e && src_[i] == '\'') ++i;
        continue;
      }
      if (c == '<') {
        if (std::size_t next = render_tag(i, e); next != i) {
          i = next;
          continue;
        }
      }
      if (c == '&') {
        std::size_t semi = src_.find(';', i);
        if (semi != std::string_view::npos && semi < e && semi - i <= 10) {
          if (auto dec = decode_html_entity(src_.substr(i, semi - i + 1))) {
            emit_replacement(*dec == " " ? " " : *dec, i);
            i = semi + 1;
            continue;
          }
        }
      }
      if (c == '_' && src_.substr(i, 2) == "__") {
        std::size_t j = i + 2;
        while (j < e && src_[j] >= 'A' && src_[j] <= 'Z') ++j;
        if (j > i + 2 && src_.substr(j, 2) == "__") {
          i = j + 2;
          continue;
        }
      }
      std::size_t len;
      decode_utf8(src_, i, &len);
      emit(src_.substr(i, len), i);
      i += len;
    }
  }

  void render_template(std::size_t b, std::size_t e) {
    std::size_t inner_b = b + 2, inner_e = e - 2;
    auto parts = split_top_level(src_, inner_b, inner_e, "|");
    std::string name = to_lower(trim(src_.substr(parts[0].first, parts[0].second - parts[0].first)));
    if ((name == "math" || name == "mvar") && parts.size() > 1) {
      std::size_t ab = parts[1].first;
      while (ab < inner_e && src_[ab] == ' ') ++ab;
      if (src_.substr(ab, 2) == "1=") ab += 2;
      render(ab, inner_e, false);
    }
  }

  void render_link(std::size_t b, std::size_t e) {
    std::size_t inner_b = b + 2, inner_e = e - 2;
    auto parts = split_top_level(src_, inner_b, inner_e, "|");
    std::string_view target = trim(src_.substr(parts[0].first, parts[0].second - parts[0].first));
    if (!target.empty() && target[0] == ':') target.remove_prefix(1);
    for (std::string_view ns : {"file:", "image:", "category:", "media:"})
      if (starts_with_ci(target, 0, ns)) return;
    if (parts.size() > 1 && parts.back().second > parts.back().first) {
      render(parts.back().first, parts.back().second, false);
    } else {
      render(parts[0].first, parts[0].second, false);
    }
  }

  // Returns the index after a handled tag, or `i` if '<' is literal text.
  std::size_t render_tag(std::size_t i, std::size_t e) {
    if (is_tag_open(src_, i, "nowiki")) {
      std::size_t gt = tag_end(src_, i);
      if (gt == std::string_view::npos) return i;
      if (src_[gt - 1] == '/') return gt + 1;
      std::size_t close = find_close_tag(src_, gt + 1, "nowiki");
      if (close == std::string_view::npos || close > e) return i;
      emit(src_.substr(gt + 1, close - gt - 1), gt + 1);
      return src_.find('>', close) + 1;
    }
    for (std::string_view dropped : {"gallery", "references", "timeline", "score", "imagemap"}) {
      if (is_tag_open(src_, i, dropped)) {
        std::size_t gt = tag_end(src_, i);
        if (gt == std::string_view::npos) return i;
        if (src_[gt - 1] == '/') return gt + 1;
        std::size_t close = find_close_tag(src_, gt + 1, dropped);
        if (close == std::string_view::npos) return gt + 1;
        return std::min(e, src_.find('>', close) + 1);
      }
    }
    std::size_t j = i + 1;
    if (j < e && src_[j] == '/') ++j;
    if (j >= e || !is_ascii_alpha(static_cast<unsigned char>(src_[j]))) return i;
    std::size_t name_b = j;
    while (j < e && is_ascii_alnum(static_cast<unsigned char>(src_[j]))) ++j;
    std::size_t gt = tag_end(src_, i);
    if (gt == std::string_view::npos || gt >= e) return i;
    std::string name = to_lower(src_.substr(name_b, j - name_b));
    if (name == "br") emit_replacement(" ", i);
    return gt + 1;
  }

  void render_table(std::size_t b, std::size_t e) {
    std::size_t line = b;
    bool first = true;
    bool row_has_content = false;
    while (line < e) {
      std::size_t le = src_.find('\n', line);
      if (le == std::string_view::npos || le > e) le = e;
      std::size_t t = line;
      while (t < le && (src_[t] == ' ' || src_[t] == '\t')) ++t;
      std::string_view rest = src_.substr(t, le - t);
      if (first) {
        first = false;
      } else if (rest.substr(0, 2) == "|}") {
        break;
      } else if (rest.substr(0, 2) == "|-") {
        if (row_has_content) emit_replacement("\n", line);
        row_has_content = false;
      } else if (rest.substr(0, 2) == "|+") {
        render_cells(t + 2, le, "||", row_has_content);
      } else if (!rest.empty() && (rest[0] == '|' || rest[0] == '!')) {
        render_cells(t + 1, le, rest[0] == '!' ? "!!" : "||", row_has_content);
      } else if (!rest.empty()) {
        if (row_has_content) emit_replacement(" ", t);
        render(t, le, false);
        row_has_content = true;
      }
      line = le + 1;
    }
    if (row_has_content && e > b) emit_replacement("\n", e);
  }

  void render_cells(std::size_t b, std::size_t e, std::string_view sep, bool &row_has_content) {
    auto cells = split_top_level(src_, b, e, sep);
    if (sep == "!!") {
      // Header rows may also separate cells with "||".
      std::vector<std::pair<std::size_t, std::size_t>> more;
      for (auto c : cells)
        for (auto p : split_top_level(src_, c.first, c.second, "||")) more.push_back(p);
      cells = std::move(more);
    }
    for (auto [cb, ce] : cells) {
      // "attributes | content"
      auto parts = split_top_level(src_, cb, ce, "|");
      if (parts.size() > 1) cb = parts.back().first;
      while (cb < ce && (src_[cb] == ' ' || src_[cb] == '\t')) ++cb;
      std::size_t te = ce;
      while (te > cb && (src_[te - 1] == ' ' || src_[te - 1] == '\t')) --te;
      if (te == cb) continue;
      if (row_has_content) emit_replacement(" ", cb);
      render(cb, te, false);
      row_has_content = true;
    }
  }

  std::string_view src_;
  std::map<std::size_t, const MathSegment *> segments_;
  std::map<std::size_t, SurfaceMatch> matches_;
  MappedText out_;
};

}  // namespace

MappedText render_surface(std::string_view wikitext, std::span<const CanonicalIdentifier> targets,
                          const RenderOptions &options) {
  MappedText stripped = strip_inline_refs(wikitext);
  const std::string &src = stripped.text;
  std::vector<MathSegment> segments =
      tokenize_math_segments(src, targets, options.base, *options.lexicon);

  // Outside-math spellings of the targets, longest first on overlap.
  std::vector<std::pair<IdentifierMatch, std::string>> found;
  for (const auto &t : targets) {
    IdentifierMatcher matcher(t, *options.lexicon);
    for (auto &m : matcher.find_all(src))
      if (!m.between_math_tags) found.emplace_back(std::move(m), t.canonical);
  }
  std::sort(found.begin(), found.end(), [](const auto &a, const auto &b) {
    if (a.first.begin != b.first.begin) return a.first.begin < b.first.begin;
    return a.first.end > b.first.end;
  });
  std::map<std::size_t, SurfaceMatch> matches;
  std::size_t covered = 0;
  for (auto &[m, canon] : found) {
    if (m.begin < covered) continue;
    matches.emplace(m.begin, SurfaceMatch{m.end, canon});
    covered = m.end;
  }

  MappedText rendered = SurfaceRenderer(src, segments, std::move(matches)).run();
  for (auto &pos : rendered.source) pos = stripped.source.at(pos);
  return rendered;
}

std::vector<std::pair<std::size_t, std::size_t>> markup_elements(std::string_view s) {
  std::vector<std::pair<std::size_t, std::size_t>> out = math_elements(s);
  for (std::size_t p = s.find("<!--"); p != std::string_view::npos; p = s.find("<!--", p + 4)) {
    std::size_t e = s.find("-->", p + 4);
    out.emplace_back(p, e == std::string_view::npos ? s.size() : e + 3);
  }
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] == '{' && s[i + 1] == '{') {
      std::size_t e = match_template(s, i, s.size());
      if (e != std::string_view::npos) {
        out.emplace_back(i, e);
        i = e - 1;
      }
    }
  }
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] == '[' && s[i + 1] == '[') {
      std::size_t e = match_link(s, i, s.size());
      if (e != std::string_view::npos) {
        out.emplace_back(i, e);
        i = e - 1;
      }
    } else if (s[i] == '[' && is_url_start(s, i + 1)) {
      std::size_t close = s.find(']', i);
      std::size_t nl = s.find('\n', i);
      if (close != std::string_view::npos && (nl == std::string_view::npos || close < nl))
        out.emplace_back(i, close + 1);
    }
  }
  std::size_t line = 0;
  while (line < s.size()) {
    std::size_t le = s.find('\n', line);
    if (le == std::string_view::npos) le = s.size();
    if (line_starts_with(s, line, "{|")) {
      std::size_t te = match_table(s, line, s.size());
      out.emplace_back(line, te);
    }
    // Emphasis runs pair up within a line.
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = line; i < le; ++i) {
      if (s[i] == '\'' && i + 1 < le && s[i + 1] == '\'') {
        std::size_t j = i;
        while (j < le && s[j] == '\'') ++j;
        runs.emplace_back(i, j);
        i = j - 1;
      }
    }
    for (std::size_t k = 0; k + 1 < runs.size(); k += 2)
      out.emplace_back(runs[k].first, runs[k + 1].second);
    line = le + 1;
  }
  for (std::string_view tag : {"sub", "sup"}) {
    std::string open = "<" + std::string(tag) + ">", close = "</" + std::string(tag) + ">";
    for (std::size_t p = s.find(open); p != std::string_view::npos; p = s.find(open, p + 1)) {
      std::size_t e = s.find(close, p);
      if (e != std::string_view::npos) out.emplace_back(p, e + close.size());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace midr
