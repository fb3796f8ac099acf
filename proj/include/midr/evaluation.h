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

// SQuAD-style EM/F1, identifier groupings and result tables.

#ifndef MIDR_EVALUATION_H_
#define MIDR_EVALUATION_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "midr/dataset.h"

namespace midr {

std::string squad_normalize(std::string_view text);
std::vector<std::string> squad_tokens(std::string_view text);

// A NULL prediction (nullopt) scores 1 iff there is no gold.
int em_score(const std::optional<std::string> &prediction, const std::vector<std::string> &golds,
             bool has_gold);
double f1_score(const std::optional<std::string> &prediction,
                const std::vector<std::string> &golds, bool has_gold);

struct RankedCandidate {
  std::string text;
  double probability = 0;
  int sentence_index = 0;
  std::size_t char_start = 0;
};

struct RankedPrediction {
  std::string article;
  std::string identifier;
  int occurrence = 0;
  std::vector<RankedCandidate> ranked;
  std::optional<std::string> top_prediction;
  std::optional<std::string> top_nonnull;
};

nlohmann::ordered_json predictions_to_json(const std::vector<RankedPrediction> &predictions);
std::vector<RankedPrediction> predictions_from_json(const nlohmann::ordered_json &j);
std::vector<RankedPrediction> read_predictions(const std::string &path);
void write_predictions(const std::string &path, const std::vector<RankedPrediction> &predictions);

enum class Grouping { kAll, kExplicit, kImplicit, kAny };

const char *grouping_name(Grouping g);     // "all", "explicit", ...
const char *grouping_title(Grouping g);    // "All Identifiers", ...
Grouping parse_grouping(std::string_view name);
std::vector<Grouping> all_groupings();

using IdentifierKey = std::pair<std::string, std::string>;  // article, identifier

std::set<IdentifierKey> grouping_members(const Dataset &dataset, Grouping grouping);

// Deduced answers of every occurrence of an identifier.
std::map<IdentifierKey, std::vector<std::string>> identifier_golds(const Dataset &dataset);

enum class Reduction { kMax, kFirst, kMean };
const char *reduction_name(Reduction r);
Reduction parse_reduction(std::string_view name);

struct EvalRow {
  Grouping grouping = Grouping::kAll;
  double em = 0;
  double f1 = 0;
  std::size_t n_identifiers = 0;
};

EvalRow evaluate(const std::vector<RankedPrediction> &predictions, const Dataset &dataset,
                 Grouping grouping, Reduction reduction = Reduction::kMax);

// One result row of the grid in long format.
struct ResultRow {
  std::string strategy;  // NNAN / NC
  int sampling_factor = 1;
  int pca = 0;  // 0 = none
  bool word_vectors = false;
  std::string model;
  std::string grouping;  // grouping_name
  double em = 0;
  double f1 = 0;
  std::size_t n_identifiers = 0;
};

std::string results_csv_header();
std::string result_csv_line(const ResultRow &r);
std::vector<ResultRow> read_results_csv(const std::string &path);

// Report layout: Identifier Class, Approach, Model, SF, WV, CG, PCA, EM, F1.
// Rows are sorted by F1 (then EM) within each grouping; top_k = 0 keeps all.
std::string report_csv(const std::vector<ResultRow> &rows, std::size_t top_k = 0);
// Mean EM/F1 per grouping for each level of each option.
std::string ablation_csv(const std::vector<ResultRow> &rows);

}  // namespace midr

#endif  // MIDR_EVALUATION_H_
