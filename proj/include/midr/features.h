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

// Candidate features (pattern, basic, textual, dependency, IR and word
// vector groups), the fold-local text vocabulary, standardization and PCA.

#ifndef MIDR_FEATURES_H_
#define MIDR_FEATURES_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "midr/candidates.h"
#include "midr/nlp.h"

namespace midr {

enum class TextRepresentation { kCounts, kNgrams, kBoth };

const char *text_representation_name(TextRepresentation r);
TextRepresentation parse_text_representation(std::string_view name);

struct FeatureConfig {
  bool use_word_vectors = false;
  TextRepresentation text_representation = TextRepresentation::kBoth;
  std::optional<int> pca_components;
  std::set<char> enabled_groups{'P', 'B', 'T', 'D', 'I', 'V'};

  bool group_on(char g) const;
};

// Article-level data the IR features need.
struct ArticleProxy {
  std::vector<std::string> tokens;  // normalized tokens of the merged passages
  std::map<std::string, std::size_t> first_occurrence;  // identifier -> article offset
};

std::map<std::string, ArticleProxy> build_article_proxies(const Dataset &dataset);

// Features of one (example, candidate) pair before vocabulary mapping.
struct RawFeatures {
  std::vector<std::pair<std::string, double>> numeric;
  std::map<std::string, std::vector<std::string>> sequences;  // T01, T02, ... D10, T19
  std::vector<Eigen::VectorXd> vectors;                        // V01..V04 when enabled
};

RawFeatures extract_features(const ExampleContext &ctx, const Candidate &candidate,
                             NlpBackend &backend, const FeatureConfig &config,
                             const ArticleProxy *proxy = nullptr);

// Names of the numeric columns of the enabled groups, in catalog order.
std::vector<std::string> numeric_columns(const FeatureConfig &config);

struct ColumnInfo {
  std::string name;
  char group = 0;
  std::string description;
};

struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<ColumnInfo> columns;
};

// Column catalog built from training rows only. Unseen tokens map to nothing.
class Vocabulary {
 public:
  static Vocabulary fit(const std::vector<RawFeatures> &rows, const FeatureConfig &config,
                        int vector_dim);

  FeatureMatrix transform(const std::vector<RawFeatures> &rows) const;
  const std::vector<ColumnInfo> &columns() const { return columns_; }

 private:
  FeatureConfig config_;
  int vector_dim_ = 0;
  std::vector<ColumnInfo> columns_;
  std::map<std::string, int> index_;
};

struct TransformState {
  std::vector<std::string> columns;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::optional<Eigen::MatrixXd> pca_basis;  // columns x components
};

TransformState fit_transforms(const FeatureMatrix &train, const FeatureConfig &config);
Eigen::MatrixXd apply_transforms(const FeatureMatrix &matrix, const TransformState &state);

std::string feature_matrix_csv(const FeatureMatrix &m);

}  // namespace midr

#endif  // MIDR_FEATURES_H_
