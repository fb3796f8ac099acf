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

// Candidate descriptions: sentences that mention the target identifier,
// NNAN / noun-chunk phrases from those sentences, normalization and labels.

#ifndef MIDR_CANDIDATES_H_
#define MIDR_CANDIDATES_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "midr/dataset.h"
#include "midr/nlp.h"
#include "midr/wikitext.h"

namespace midr {

enum class Strategy { kNNAN, kNC };
enum class Label { kPositive, kNegative, kUnlabeled };

const char *strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);
const char *label_name(Label l);

struct Candidate {
  std::string text;
  std::string normalized;
  int sentence_index = 0;
  std::size_t char_start = 0;  // byte offsets into the surface passage
  std::size_t char_end = 0;
  int token_begin = 0;  // token range within the sentence
  int token_end = 0;
  Strategy strategy = Strategy::kNNAN;
  Label label = Label::kUnlabeled;
};

struct Sentence {
  CharSpan span;  // into the surface passage
  Analysis analysis;
  std::vector<TokenSpan> identifier_tokens;
};

// An example prepared for candidate generation and feature extraction.
struct ExampleContext {
  std::string article;
  std::string identifier;
  int occurrence = 0;
  const OccurrenceExample *example = nullptr;
  MappedText surface;  // source positions are bytes of example->passage
  std::vector<Sentence> sentences;
  std::size_t passage_article_offset = 0;  // code points
};

// Token ranges whose covered text equals the canonical identifier.
std::vector<TokenSpan> find_identifier_tokens(const Analysis &analysis, std::string_view sentence,
                                              std::string_view canonical);

ExampleContext prepare_example(const std::string &article, const std::string &identifier,
                               const OccurrenceExample &example, NlpBackend &backend,
                               const MathLexicon &lexicon = MathLexicon::builtin());

// Sentences of a rendered passage that contain the identifier token.
std::vector<CharSpan> target_sentences(std::string_view surface, std::string_view canonical,
                                       NlpBackend &backend);

// Candidates from one analyzed sentence. Phrases that cross a placeholder
// token or contain the target identifier are dropped.
std::vector<Candidate> generate_candidates(const Analysis &analysis, std::string_view sentence,
                                           std::size_t sentence_offset, int sentence_index,
                                           Strategy strategy, std::string_view canonical = {});

// All candidates of an example, from sentences that contain the identifier,
// deduplicated by span.
std::vector<Candidate> example_candidates(const ExampleContext &ctx, Strategy strategy);

// Math placeholders such as formula3 or expression12.
bool is_placeholder_token(std::string_view t);

std::string normalize_description(std::string_view text);

// Gold texts used for labels: the surface_span of each answer.
std::vector<std::string> gold_surfaces(const OccurrenceExample &example);

void label_candidates(std::vector<Candidate> &candidates, const std::vector<std::string> &golds);

struct CandidateRow {
  std::string article;
  std::string identifier;
  int occurrence = 0;
  Candidate candidate;
};

std::string candidates_csv(const std::vector<CandidateRow> &rows);

}  // namespace midr

#endif  // MIDR_CANDIDATES_H_
