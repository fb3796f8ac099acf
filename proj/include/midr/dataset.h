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

// MFQuAD-format dataset construction: occurrence matching, passage windows,
// annotation attachment, validation and corpus statistics. All offsets stored
// in examples are code point offsets, as in the published JSON.

#ifndef MIDR_DATASET_H_
#define MIDR_DATASET_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "midr/wikitext.h"

namespace midr {

struct AnswerRecord {
  bool wikilink = false;
  bool explicit_answer = false;
  std::string raw_span;
  std::string surface_span;
  std::string deduced_answer;
  bool references_this_id_occurrence = true;
  std::size_t start_pos = 0;
  std::size_t end_pos = 0;
};

struct OccurrenceExample {
  int occurrence = 0;
  bool sanitised = false;
  std::string id_mini_context;
  std::string matched_id_representation;
  std::size_t id_article_offset = 0;
  std::size_t id_passage_offset = 0;
  bool between_math_tags = false;
  bool same_as_previous = false;
  std::string passage;
  std::vector<AnswerRecord> answers;
  std::string digest;
};

struct IdentifierEntry {
  std::string identifier;  // canonical form
  std::vector<OccurrenceExample> examples;
};

struct ArticleEntry {
  std::string title;
  std::string revision_tag;
  std::vector<IdentifierEntry> identifiers;
};

struct Dataset {
  std::string digest_algorithm = "md5";
  std::vector<ArticleEntry> articles;

  std::size_t example_count() const;
  std::size_t identifier_count() const;
};

// One article to build from: its markup plus the identifiers to look for,
// in any encoding.
struct ArticleInput {
  RawArticle article;
  std::vector<std::string> identifiers;
};

struct Occurrence {
  std::size_t offset = 0;       // code points into the ref-stripped article
  std::size_t byte_offset = 0;
  std::size_t length = 0;       // code points
  std::string representation;
  bool between_math_tags = false;
};

std::vector<Occurrence> find_occurrences(std::string_view stripped_article,
                                         const CanonicalIdentifier &target,
                                         const MathLexicon &lexicon = MathLexicon::builtin());

struct PassageWindow {
  std::size_t begin = 0;  // code points
  std::size_t end = 0;
  bool sanitised = false;
};

// Paragraph boundaries in code points: 0, the end, the second newline of
// every blank line and the newline that precedes a heading line.
std::vector<std::size_t> paragraph_boundaries(std::string_view article);

PassageWindow extract_passage(std::string_view article, std::size_t offset, std::size_t id_len,
                              std::size_t half_width = 200);

struct BuildOptions {
  std::string digest_algorithm = "md5";
  std::size_t half_width = 200;
  std::size_t mini_context = 10;
  const MathLexicon *lexicon = &MathLexicon::builtin();
};

// Per-article state shared by build_example calls.
class ArticleContext {
 public:
  explicit ArticleContext(std::string stripped);

  const std::string &text() const { return text_; }
  std::size_t size() const;
  PassageWindow window(std::size_t offset, std::size_t id_len, std::size_t half_width) const;
  std::string substr(std::size_t begin, std::size_t end) const;

 private:
  std::string text_;
  std::vector<std::size_t> cp_starts_;
  std::vector<std::size_t> boundaries_;
  std::vector<std::pair<std::size_t, std::size_t>> elements_;  // code points
};

OccurrenceExample build_example(const ArticleContext &article, const Occurrence &match,
                                const std::vector<OccurrenceExample> &prior,
                                const BuildOptions &options = {});

Dataset build_dataset(const std::vector<ArticleInput> &inputs, const BuildOptions &options = {});

// One annotation line. identifier may be any encoding.
struct Annotation {
  std::string article;
  std::string identifier;
  int occurrence = 0;
  AnswerRecord answer;
  bool has_surface_span = false;
};

struct AttachOptions {
  bool keep_numeric = false;
  const MathLexicon *lexicon = &MathLexicon::builtin();
};

// Verifies every span against its passage and appends the answers. Throws
// AnnotationAlignmentError naming the first bad record.
void attach_annotations(Dataset &dataset, const std::vector<Annotation> &annotations,
                        const AttachOptions &options = {});

struct Violation {
  std::string article;
  std::string identifier;
  int occurrence = 0;
  std::string message;
};

std::vector<Violation> validate_dataset(const Dataset &dataset);

struct SummaryStats {
  std::size_t count = 0;
  double min = 0, max = 0, mean = 0, median = 0;
  std::map<std::string, double> quantiles;
};

// Linear interpolation between closest ranks.
double quantile(std::vector<double> values, double q);
SummaryStats summarize(const std::vector<double> &values, const std::vector<double> &qs = {});

struct DatasetStats {
  std::size_t n_articles = 0;
  std::size_t n_identifiers = 0;
  std::size_t n_examples = 0;
  std::map<std::size_t, std::size_t> occurrence_histogram;
  SummaryStats occurrence_stats;
  SummaryStats covering_span_stats;
  SummaryStats context_length_stats;
  std::vector<double> covering_spans;
  std::vector<double> context_lengths;
  std::size_t described_identifiers = 0;
  std::size_t explicit_identifiers = 0;  // at least one explicit answer
  std::size_t implicit_only_identifiers = 0;
  std::size_t undescribed_identifiers = 0;
  std::vector<std::pair<std::string, std::string>> implicit_identifiers;  // (title, identifier)
};

// Shortest substring length covering the identifier occurrence and one of
// its answers, or nullopt when there is no answer outside a table.
std::optional<std::size_t> covering_span(const OccurrenceExample &example);

// Code point ranges of wikitable markup ({| ... |}) in a passage.
std::vector<std::pair<std::size_t, std::size_t>> table_ranges(std::string_view passage);

DatasetStats compute_stats(const Dataset &dataset);

// I/O. Articles and annotations are JSON lines; the dataset is one JSON
// document with examples in the published field order.
std::vector<ArticleInput> read_articles(const std::string &path);
std::vector<Annotation> read_annotations(const std::string &path);
std::string dataset_to_json(const Dataset &dataset);
Dataset dataset_from_json(std::string_view json);
Dataset read_dataset(const std::string &path);
void write_dataset(const Dataset &dataset, const std::string &path);
std::string example_to_json(const OccurrenceExample &example, int indent = 2);
std::string stats_to_json(const DatasetStats &stats);
// Writes stats.json and the three histogram CSVs into a directory.
void write_stats(const DatasetStats &stats, const std::string &dir);
// Nested field names and JSON types of one example, one "path:type" per line.
std::string schema_signature(std::string_view example_json);

// (title, identifier) pairs from a "title<TAB>identifier" file.
std::vector<std::pair<std::string, std::string>> read_identifier_list(const std::string &path);

}  // namespace midr

#endif  // MIDR_DATASET_H_
