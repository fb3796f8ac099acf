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

// Cross-validated ranking experiments: candidate pools, fold maps,
// negative downsampling, ranking with a null threshold and the grid runner.

#ifndef MIDR_EXPERIMENT_H_
#define MIDR_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "midr/candidates.h"
#include "midr/dataset.h"
#include "midr/evaluation.h"
#include "midr/features.h"
#include "midr/models.h"
#include "midr/nlp.h"

namespace midr {

struct ExperimentConfig {
  Strategy strategy = Strategy::kNNAN;
  int sampling_factor = 1;
  int pca = 0;  // 0 = no PCA
  bool word_vectors = false;
  ModelKind model = ModelKind::kSvmSota;

  // Stable identifier, e.g. "NNAN-sf1-pca0-wv0-SVM_SOTA".
  std::string key() const;
  bool operator==(const ExperimentConfig &) const = default;
};

// Settings shared by every cell of a run.
struct RunSettings {
  std::uint64_t seed = 42;
  int folds = 5;
  double threshold = 0.5;
  Reduction reduction = Reduction::kMax;
  TextRepresentation text_representation = TextRepresentation::kBoth;
  std::set<char> groups{'P', 'B', 'T', 'D', 'I', 'V'};
  BackendOptions backend;
  int workers = 1;
};

FeatureConfig feature_config(const ExperimentConfig &config, const RunSettings &settings);

// All 2 * 3 * 4 * 2 * 5 = 240 configurations.
std::vector<ExperimentConfig> full_grid();

// Article-level fold map.
class FoldAssignment {
 public:
  static FoldAssignment make(std::vector<std::string> titles, int n_folds, std::uint64_t seed);
  static FoldAssignment read_tsv(const std::string &path);
  void write_tsv(const std::string &path) const;

  int fold_of(const std::string &title) const;  // throws ConfigError for unknown titles
  int n_folds() const { return n_folds_; }
  const std::map<std::string, int> &folds() const { return fold_; }
  bool covers(const Dataset &dataset) const;

 private:
  int n_folds_ = 5;
  std::map<std::string, int> fold_;
};

// Indices kept: every positive plus min(factor * #pos, #neg) negatives drawn
// without replacement. labels are 0/1. Returned in increasing order.
std::vector<std::size_t> downsample_negatives(const std::vector<int> &labels, int factor,
                                              std::uint64_t seed);

// Candidates of one strategy with their raw features, grouped by example.
struct PoolRow {
  std::size_t example = 0;
  Candidate candidate;
  RawFeatures features;
  int label = 0;
};

struct PoolExample {
  std::string article;
  std::string identifier;
  int occurrence = 0;
  std::vector<std::size_t> rows;
};

struct CandidatePool {
  Strategy strategy = Strategy::kNNAN;
  int vector_dim = 0;
  std::vector<PoolExample> examples;
  std::vector<PoolRow> rows;
};

// Word vectors are always extracted so one pool serves both WV settings.
CandidatePool build_pool(const Dataset &dataset, Strategy strategy, NlpBackend &backend,
                         int workers = 1);

// Ranks candidates by probability; ties go to the earlier sentence, then the
// earlier char_start, then the shorter text.
RankedPrediction rank(const PoolExample &example, const std::vector<const Candidate *> &candidates,
                      const std::vector<double> &probabilities, double threshold = 0.5);

std::uint64_t fold_seed(std::uint64_t seed, int fold);

// Optional hook to inspect what each fold was trained on.
struct FoldTrace {
  int fold = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::string> columns;
};

std::vector<RankedPrediction> cross_validate(const CandidatePool &pool,
                                             const ExperimentConfig &config,
                                             const FoldAssignment &folds,
                                             const RunSettings &settings,
                                             std::vector<FoldTrace> *trace = nullptr);

std::vector<ResultRow> score_config(const ExperimentConfig &config,
                                    const std::vector<RankedPrediction> &predictions,
                                    const Dataset &dataset, Reduction reduction);

struct GridOptions {
  std::string out_dir;
  RunSettings settings;
  std::string config_digest;  // recorded in the manifest
  std::vector<std::string> arguments;
  std::function<void(const std::string &)> log;
};

struct GridSummary {
  std::size_t cells = 0;
  std::size_t skipped = 0;  // already finished
  std::vector<std::string> failures;
  std::vector<ResultRow> rows;
};

// Runs every configuration with 5-fold CV. Finished cells under out_dir are
// reused; results.csv, report.csv, ablation.csv, folds.tsv and manifest.json
// are written at the end.
GridSummary run_grid(const Dataset &dataset, const std::vector<ExperimentConfig> &configs,
                     NlpBackend &backend, const GridOptions &options);

}  // namespace midr

#endif  // MIDR_EXPERIMENT_H_
