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

#include "midr/candidates.h"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "midr/errors.h"
#include "midr/text.h"

namespace midr {

const char *strategy_name(Strategy s) { return s == Strategy::kNNAN ? "NNAN" : "NC"; }

Strategy parse_strategy(std::string_view name) {
  if (name == "NNAN" || name == "nnan") return Strategy::kNNAN;
  if (name == "NC" || name == "nc") return Strategy::kNC;
  throw ConfigError("unknown candidate strategy '" + std::string(name) + "'");
}

const char *label_name(Label l) {
  switch (l) {
    case Label::kPositive: return "positive";
    case Label::kNegative: return "negative";
    default: return "unlabeled";
  }
}

bool is_placeholder_token(std::string_view t) {
  static const std::regex re("(formula|expression)[0-9]+");
  return std::regex_match(t.begin(), t.end(), re);
}

namespace {

bool is_noun(const Token &t) { return t.pos == "NOUN" || t.pos == "PROPN"; }

}  // namespace

std::vector<TokenSpan> find_identifier_tokens(const Analysis &a, std::string_view sentence,
                                              std::string_view canonical) {
  std::vector<TokenSpan> out;
  if (canonical.empty()) return out;
  const int n = static_cast<int>(a.tokens.size());
  for (int b = 0; b < n; ++b) {
    std::size_t start = a.tokens[b].char_start;
    for (int e = b; e < n; ++e) {
      std::size_t end = a.tokens[e].char_end;
      if (end - start > canonical.size()) break;
      if (sentence.substr(start, end - start) == canonical) {
        out.emplace_back(b, e + 1);
        break;
      }
    }
  }
  return out;
}

ExampleContext prepare_example(const std::string &article, const std::string &identifier,
                               const OccurrenceExample &example, NlpBackend &backend,
                               const MathLexicon &lexicon) {
  ExampleContext ctx;
  ctx.article = article;
  ctx.identifier = identifier;
  ctx.occurrence = example.occurrence;
  ctx.example = &example;
  ctx.passage_article_offset = example.id_article_offset - example.id_passage_offset;
  std::vector<CanonicalIdentifier> targets{make_identifier(identifier, lexicon)};
  RenderOptions ro;
  ro.lexicon = &lexicon;
  ctx.surface = render_surface(std::string_view(example.passage), targets, ro);
  const std::string &s = ctx.surface.text;
  for (auto span : backend.segment_sentences(s)) {
    Sentence sent;
    sent.span = span;
    std::string_view text = std::string_view(s).substr(span.first, span.second - span.first);
    sent.analysis = backend.analyze(text);
    sent.identifier_tokens = find_identifier_tokens(sent.analysis, text, identifier);
    ctx.sentences.push_back(std::move(sent));
  }
  return ctx;
}

std::vector<CharSpan> target_sentences(std::string_view surface, std::string_view canonical,
                                       NlpBackend &backend) {
  std::vector<CharSpan> out;
  for (auto span : backend.segment_sentences(surface)) {
    std::string_view text = surface.substr(span.first, span.second - span.first);
    if (!find_identifier_tokens(backend.analyze(text), text, canonical).empty())
      out.push_back(span);
  }
  return out;
}

std::vector<Candidate> generate_candidates(const Analysis &a, std::string_view sentence,
                                           std::size_t sentence_offset, int sentence_index,
                                           Strategy strategy, std::string_view canonical) {
  const int n = static_cast<int>(a.tokens.size());
  std::vector<TokenSpan> spans;
  if (strategy == Strategy::kNC) {
    spans = a.noun_chunks;
  } else {
    auto tag_at = [&](int i, bool (*pred)(const Token &)) { return i < n && pred(a.tokens[i]); };
    auto adj = [](const Token &t) { return t.pos == "ADJ"; };
    auto adp = [](const Token &t) { return t.pos == "ADP"; };
    for (int i = 0; i < n;) {
      int j = i;
      while (tag_at(j, adj)) ++j;
      int k = j;
      while (tag_at(k, is_noun)) ++k;
      if (k == j) {
        ++i;
        continue;
      }
      if (tag_at(k, adp)) {
        int p = k + 1;
        while (tag_at(p, adj)) ++p;
        int q = p;
        while (tag_at(q, is_noun)) ++q;
        if (q > p) k = q;
      }
      spans.emplace_back(i, k);
      i = k;
    }
  }
  auto ids = find_identifier_tokens(a, sentence, canonical);
  std::vector<Candidate> out;
  for (auto [b, e] : spans) {
    if (b >= e || e > n) continue;
    bool bad = false;
    for (int i = b; i < e; ++i) bad |= is_placeholder_token(a.tokens[i].text);
    for (auto [ib, ie] : ids) bad |= ib < e && b < ie;
    if (bad) continue;
    Candidate c;
    std::size_t cs = a.tokens[b].char_start, ce = a.tokens[e - 1].char_end;
    c.text = std::string(sentence.substr(cs, ce - cs));
    c.normalized = normalize_description(c.text);
    c.sentence_index = sentence_index;
    c.char_start = sentence_offset + cs;
    c.char_end = sentence_offset + ce;
    c.token_begin = b;
    c.token_end = e;
    c.strategy = strategy;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Candidate> example_candidates(const ExampleContext &ctx, Strategy strategy) {
  std::vector<Candidate> out;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t s = 0; s < ctx.sentences.size(); ++s) {
    const Sentence &sent = ctx.sentences[s];
    if (sent.identifier_tokens.empty()) continue;
    std::string_view text = std::string_view(ctx.surface.text)
                                .substr(sent.span.first, sent.span.second - sent.span.first);
    for (auto &c : generate_candidates(sent.analysis, text, sent.span.first, static_cast<int>(s),
                                       strategy, ctx.identifier))
      if (seen.insert({c.char_start, c.char_end}).second) out.push_back(std::move(c));
  }
  return out;
}

std::string normalize_description(std::string_view text) {
  std::string lower = to_lower(text);
  std::string no_punct;
  for (std::size_t i = 0; i < lower.size();) {
    std::size_t len;
    char32_t c = decode_utf8(lower, i, &len);
    if (!is_unicode_punct(c)) no_punct.append(lower, i, len);
    i += len;
  }
  std::string out;
  for (const auto &w : split_whitespace(no_punct)) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<std::string> gold_surfaces(const OccurrenceExample &example) {
  std::vector<std::string> out;
  for (const auto &a : example.answers) out.push_back(a.surface_span);
  return out;
}

void label_candidates(std::vector<Candidate> &candidates, const std::vector<std::string> &golds) {
  std::vector<std::string> norm;
  for (const auto &g : golds) norm.push_back(normalize_description(g));
  for (auto &c : candidates) {
    bool pos = false;
    if (!c.normalized.empty())
      for (const auto &g : norm) pos |= g.find(c.normalized) != std::string::npos;
    c.label = pos ? Label::kPositive : Label::kNegative;
  }
}

std::string candidates_csv(const std::vector<CandidateRow> &rows) {
  std::string out = "article,identifier,occurrence,strategy,char_start,char_end,text,label\n";
  for (const auto &r : rows) {
    const Candidate &c = r.candidate;
    out += csv_field(r.article) + "," + csv_field(r.identifier) + "," +
           std::to_string(r.occurrence) + "," + strategy_name(c.strategy) + "," +
           std::to_string(c.char_start) + "," + std::to_string(c.char_end) + "," +
           csv_field(c.text) + "," + label_name(c.label) + "\n";
  }
  return out;
}

}  // namespace midr
