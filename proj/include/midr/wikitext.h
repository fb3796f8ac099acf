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

// Wikitext and texvc preprocessing: reference stripping, math segmentation,
// identifier canonicalization and surface-text rendering. Every transform
// that changes text returns a MappedText so positions can be traced back to
// the markup they came from.

#ifndef MIDR_WIKITEXT_H_
#define MIDR_WIKITEXT_H_

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace midr {

struct RawArticle {
  std::string title;
  std::string wikitext;
  std::string revision_tag;
};

// Text plus, for every byte of it, the byte offset in the source it was
// produced from. source has text.size() + 1 entries; the last one is the end
// of the consumed source range. Entries are non-decreasing.
struct MappedText {
  std::string text;
  std::vector<std::size_t> source;

  std::size_t to_source(std::size_t pos) const { return source.at(pos); }
};

// LaTeX macro -> canonical surface form, plus the relation operators that
// make a math segment a formula.
class MathLexicon {
 public:
  static const MathLexicon &builtin();

  // Extends the builtin table from a text file. Each non-empty line is
  // "macro<TAB>canonical"; a line "relation<TAB>op" adds a relation operator.
  // Lines starting with '#' are comments.
  static MathLexicon load(const std::string &path);

  void add_macro(std::string macro, std::string canonical);
  void add_relation(std::string op);

  // Canonical form for a macro spelling such as "\alpha" or "\mathbb{R}".
  const std::string *lookup(std::string_view macro) const;
  // Preferred macro spelling for a canonical form, if one exists.
  const std::string *macro_for(std::string_view canonical) const;
  bool is_relation(std::string_view op) const { return relations_.count(std::string(op)) > 0; }
  const std::set<std::string> &relations() const { return relations_; }

 private:
  std::map<std::string, std::string, std::less<>> macros_;
  std::map<std::string, std::string, std::less<>> reverse_;
  std::set<std::string> relations_;
};

// Structural decomposition of a single identifier.
struct IdentifierParts {
  std::string base;
  std::string sub;
  std::string sup;
  std::string primes;

  std::string canonical() const;
};

IdentifierParts parse_identifier(std::string_view token,
                                 const MathLexicon &lexicon = MathLexicon::builtin());

// Canonical surface form of one identifier encoding (LaTeX, HTML, Unicode).
// Throws NotAnIdentifier when the token holds an operator or more than one
// identifier. Idempotent.
std::string normalize_identifier(std::string_view token,
                                 const MathLexicon &lexicon = MathLexicon::builtin());

struct CanonicalIdentifier {
  std::string canonical;
  std::set<std::string> variants;
};

// Builds the canonical form and every accepted encoding from any one
// encoding of the identifier.
CanonicalIdentifier make_identifier(std::string_view any_encoding,
                                    const MathLexicon &lexicon = MathLexicon::builtin());

// Removes <ref>...</ref> and <ref .../> elements.
MappedText strip_inline_refs(std::string_view wikitext);

enum class MathKind { kFormula, kExpression, kLoneIdentifier };

const char *math_kind_name(MathKind kind);

struct MathSegment {
  std::size_t start = 0;       // '<' of the opening tag
  std::size_t end = 0;         // one past '>' of the closing tag
  std::size_t body_begin = 0;
  std::size_t body_end = 0;
  std::string body;
  MathKind kind = MathKind::kExpression;
  int ordinal = 0;             // per kind, document order, from 1 (+ base)
  std::string canonical;       // set for kLoneIdentifier
};

// Number of formulas/expressions that precede the text being processed, so
// that placeholder numbering can continue an article-wide sequence.
struct MathOrdinals {
  int formula = 0;
  int expression = 0;
};

bool has_top_level_relation(std::string_view body,
                            const MathLexicon &lexicon = MathLexicon::builtin());

std::vector<MathSegment> tokenize_math_segments(
    std::string_view wikitext, std::span<const CanonicalIdentifier> targets = {},
    MathOrdinals base = {}, const MathLexicon &lexicon = MathLexicon::builtin());

// Replaces formula/expression segments with "formulaN"/"expressionN" and lone
// target identifiers with their canonical token. Other text is untouched.
MappedText replace_math_with_placeholders(std::string_view wikitext,
                                          std::span<const MathSegment> segments,
                                          std::span<const CanonicalIdentifier> targets);

// One identifier token found inside a math body. Offsets are relative to the
// body. When the token carries a superscript, the *_nosup fields describe the
// token with the superscript dropped (x^2 read as x squared).
struct MathToken {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string canonical;
  std::size_t end_nosup = 0;
  std::string canonical_nosup;
};

std::vector<MathToken> scan_math_identifiers(
    std::string_view body, const MathLexicon &lexicon = MathLexicon::builtin());

struct IdentifierMatch {
  std::size_t begin = 0;  // byte offsets into the searched text
  std::size_t end = 0;
  std::string representation;
  bool between_math_tags = false;
};

// Finds every encoding of one identifier in Wikitext: exact identifier tokens
// inside <math> elements and word-boundary guarded variant spellings outside.
class IdentifierMatcher {
 public:
  explicit IdentifierMatcher(CanonicalIdentifier target,
                             const MathLexicon &lexicon = MathLexicon::builtin());

  const CanonicalIdentifier &target() const { return target_; }
  // Variant spellings searched for outside math, longest first.
  const std::vector<std::string> &text_variants() const { return text_variants_; }

  std::vector<IdentifierMatch> find_all(std::string_view wikitext) const;

 private:
  CanonicalIdentifier target_;
  const MathLexicon *lexicon_;
  std::vector<std::string> text_variants_;
};

struct RenderOptions {
  MathOrdinals base;
  const MathLexicon *lexicon = &MathLexicon::builtin();
};

// Plain surface text of a Wikitext fragment: references stripped, links
// replaced by their labels, emphasis and templates removed, tables flattened
// and math replaced by placeholders or canonical identifier tokens. The map
// points into the original (unstripped) input.
MappedText render_surface(std::string_view wikitext,
                          std::span<const CanonicalIdentifier> targets,
                          const RenderOptions &options = {});

inline MappedText render_surface(const RawArticle &article,
                                 std::span<const CanonicalIdentifier> targets,
                                 const RenderOptions &options = {}) {
  return render_surface(article.wikitext, targets, options);
}

// Byte ranges [begin, end) of markup elements a passage must not split:
// templates, math, links, tables, comments and single-line emphasis runs.
std::vector<std::pair<std::size_t, std::size_t>> markup_elements(std::string_view wikitext);

// Byte ranges of <math> elements (tags included).
std::vector<std::pair<std::size_t, std::size_t>> math_elements(std::string_view wikitext);

}  // namespace midr

#endif  // MIDR_WIKITEXT_H_
