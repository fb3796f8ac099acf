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

#include "midr/experiment.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "midr/errors.h"
#include "midr/manifest.h"
#include "midr/text.h"

namespace midr {

namespace fs = std::filesystem;

std::string ExperimentConfig::key() const {
  std::ostringstream out;
  out << strategy_name(strategy) << "-sf" << sampling_factor << "-pca" << pca << "-wv"
      << (word_vectors ? 1 : 0) << "-" << model_name(model);
  return out.str();
}

FeatureConfig feature_config(const ExperimentConfig &config, const RunSettings &settings) {
  FeatureConfig f;
  f.use_word_vectors = config.word_vectors;
  f.text_representation = settings.text_representation;
  if (config.pca > 0) f.pca_components = config.pca;
  f.enabled_groups = settings.groups;
  return f;
}

std::vector<ExperimentConfig> full_grid() {
  std::vector<ExperimentConfig> out;
  for (Strategy s : {Strategy::kNNAN, Strategy::kNC})
    for (int sf : {1, 2, 4})
      for (int pca : {0, 50, 100, 200})
        for (bool wv : {false, true})
          for (ModelKind m : all_models()) out.push_back({s, sf, pca, wv, m});
  return out;
}

FoldAssignment FoldAssignment::make(std::vector<std::string> titles, int n_folds,
                                    std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("need at least two folds");
  std::sort(titles.begin(), titles.end());
  titles.erase(std::unique(titles.begin(), titles.end()), titles.end());
  std::mt19937_64 rng(seed);
  std::shuffle(titles.begin(), titles.end(), rng);
  FoldAssignment f;
  f.n_folds_ = n_folds;
  for (std::size_t i = 0; i < titles.size(); ++i)
    f.fold_[titles[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
  return f;
}

FoldAssignment FoldAssignment::read_tsv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  FoldAssignment f;
  f.n_folds_ = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') {
      if (line.rfind("# folds=", 0) == 0) f.n_folds_ = std::stoi(line.substr(8));
      continue;
    }
    auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected title<TAB>fold");
    int fold = std::stoi(line.substr(tab + 1));
    f.fold_[line.substr(0, tab)] = fold;
    f.n_folds_ = std::max(f.n_folds_, fold + 1);
  }
  return f;
}

void FoldAssignment::write_tsv(const std::string &path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "# folds=" << n_folds_ << "\n";
  for (const auto &[title, fold] : fold_) out << title << '\t' << fold << "\n";
}

int FoldAssignment::fold_of(const std::string &title) const {
  auto it = fold_.find(title);
  if (it == fold_.end()) throw ConfigError("article '" + title + "' has no fold");
  return it->second;
}

bool FoldAssignment::covers(const Dataset &dataset) const {
  for (const auto &a : dataset.articles)
    if (!fold_.count(a.title)) return false;
  return true;
}

std::vector<std::size_t> downsample_negatives(const std::vector<int> &labels, int factor,
                                              std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  std::size_t keep = std::min(neg.size(), static_cast<std::size_t>(std::max(factor, 0)) * pos.size());
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < keep; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, neg.size() - 1);
    std::swap(neg[i], neg[pick(rng)]);
  }
  neg.resize(keep);
  pos.insert(pos.end(), neg.begin(), neg.end());
  std::sort(pos.begin(), pos.end());
  return pos;
}

CandidatePool build_pool(const Dataset &dataset, Strategy strategy, NlpBackend &backend,
                         int workers) {
  CandidatePool pool;
  pool.strategy = strategy;
  pool.vector_dim = backend.dim();
  struct Job {
    const ArticleEntry *article;
    const IdentifierEntry *identifier;
    const OccurrenceExample *example;
  };
  std::vector<Job> jobs;
  for (const auto &a : dataset.articles)
    for (const auto &id : a.identifiers)
      for (const auto &ex : id.examples) jobs.push_back({&a, &id, &ex});
  auto proxies = build_article_proxies(dataset);
  FeatureConfig fc;
  fc.use_word_vectors = true;

  std::vector<std::vector<PoolRow>> per_example(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      try {
        const Job &j = jobs[i];
        ExampleContext ctx =
            prepare_example(j.article->title, j.identifier->identifier, *j.example, backend);
        auto cands = example_candidates(ctx, strategy);
        label_candidates(cands, gold_surfaces(*j.example));
        const ArticleProxy &proxy = proxies.at(j.article->title);
        for (auto &c : cands) {
          PoolRow row;
          row.example = i;
          row.label = c.label == Label::kPositive ? 1 : 0;
          row.features = extract_features(ctx, c, backend, fc, &proxy);
          row.candidate = std::move(c);
          per_example[i].push_back(std::move(row));
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < std::max(1, workers); ++t) threads.emplace_back(work);
  work();
  for (auto &t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    PoolExample ex;
    ex.article = jobs[i].article->title;
    ex.identifier = jobs[i].identifier->identifier;
    ex.occurrence = jobs[i].example->occurrence;
    for (auto &row : per_example[i]) {
      ex.rows.push_back(pool.rows.size());
      pool.rows.push_back(std::move(row));
    }
    pool.examples.push_back(std::move(ex));
  }
  return pool;
}

RankedPrediction rank(const PoolExample &example, const std::vector<const Candidate *> &cands,
                      const std::vector<double> &probs, double threshold) {
  RankedPrediction p;
  p.article = example.article;
  p.identifier = example.identifier;
  p.occurrence = example.occurrence;
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    if (cands[a]->sentence_index != cands[b]->sentence_index)
      return cands[a]->sentence_index < cands[b]->sentence_index;
    if (cands[a]->char_start != cands[b]->char_start) return cands[a]->char_start < cands[b]->char_start;
    if (cands[a]->text.size() != cands[b]->text.size()) return cands[a]->text.size() < cands[b]->text.size();
    return a < b;
  });
  for (std::size_t i : order)
    p.ranked.push_back({cands[i]->text, probs[i], cands[i]->sentence_index, cands[i]->char_start});
  if (!p.ranked.empty()) {
    p.top_nonnull = p.ranked.front().text;
    if (p.ranked.front().probability > threshold) p.top_prediction = p.ranked.front().text;
  }
  return p;
}

std::uint64_t fold_seed(std::uint64_t seed, int fold) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fold)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<RankedPrediction> cross_validate(const CandidatePool &pool,
                                             const ExperimentConfig &config,
                                             const FoldAssignment &folds,
                                             const RunSettings &settings,
                                             std::vector<FoldTrace> *trace) {
  if (pool.strategy != config.strategy)
    throw ConfigError("candidate pool strategy does not match " + config.key());
  std::vector<int> example_fold(pool.examples.size());
  for (std::size_t i = 0; i < pool.examples.size(); ++i)
    example_fold[i] = folds.fold_of(pool.examples[i].article);
  const FeatureConfig fc = feature_config(config, settings);

  std::vector<RankedPrediction> out(pool.examples.size());
  for (int f = 0; f < folds.n_folds(); ++f) {
    std::vector<std::size_t> test_examples;
    for (std::size_t i = 0; i < pool.examples.size(); ++i)
      if (example_fold[i] == f) test_examples.push_back(i);
    if (test_examples.empty()) continue;

    std::vector<std::size_t> train_rows;
    std::vector<int> train_labels;
    for (std::size_t r = 0; r < pool.rows.size(); ++r)
      if (example_fold[pool.rows[r].example] != f) {
        train_rows.push_back(r);
        train_labels.push_back(pool.rows[r].label);
      }
    const std::uint64_t seed = fold_seed(settings.seed, f);
    std::vector<std::size_t> keep = downsample_negatives(train_labels, config.sampling_factor, seed);
    std::vector<RawFeatures> raw;
    std::vector<int> y;
    std::vector<std::size_t> kept_rows;
    for (std::size_t k : keep) {
      raw.push_back(pool.rows[train_rows[k]].features);
      y.push_back(train_labels[k]);
      kept_rows.push_back(train_rows[k]);
    }

    const std::string where = config.key() + " fold " + std::to_string(f);
    Vocabulary vocab = Vocabulary::fit(raw, fc, pool.vector_dim);
    FeatureMatrix train = vocab.transform(raw);
    if (trace) {
      FoldTrace t;
      t.fold = f;
      t.train_rows = kept_rows;
      for (const auto &c : vocab.columns()) t.columns.push_back(c.name);
      trace->push_back(std::move(t));
    }
    std::unique_ptr<Classifier> model;
    TransformState state;
    try {
      state = fit_transforms(train, fc);
      model = make_classifier({config.model, seed});
      model->fit(apply_transforms(train, state), y);
    } catch (const TrainingError &e) {
      throw TrainingError(where + ": " + e.what());
    } catch (const DimensionalityError &e) {
      throw DimensionalityError(where + ": " + e.what());
    }

    std::vector<RawFeatures> test_raw;
    for (std::size_t e : test_examples)
      for (std::size_t r : pool.examples[e].rows) test_raw.push_back(pool.rows[r].features);
    Eigen::VectorXd probs;
    if (!test_raw.empty()) probs = model->predict_proba(apply_transforms(vocab.transform(test_raw), state));
    Eigen::Index at = 0;
    for (std::size_t e : test_examples) {
      std::vector<const Candidate *> cands;
      std::vector<double> p;
      for (std::size_t r : pool.examples[e].rows) {
        cands.push_back(&pool.rows[r].candidate);
        p.push_back(probs(at++));
      }
      out[e] = rank(pool.examples[e], cands, p, settings.threshold);
    }
  }
  return out;
}

std::vector<ResultRow> score_config(const ExperimentConfig &config,
                                    const std::vector<RankedPrediction> &predictions,
                                    const Dataset &dataset, Reduction reduction) {
  std::vector<ResultRow> rows;
  for (Grouping g : all_groupings()) {
    EvalRow e = evaluate(predictions, dataset, g, reduction);
    rows.push_back({strategy_name(config.strategy), config.sampling_factor, config.pca,
                    config.word_vectors, model_name(config.model), grouping_name(g), e.em, e.f1,
                    e.n_identifiers});
  }
  return rows;
}

namespace {

std::string settings_fingerprint(const RunSettings &s, const std::string &backend) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["folds"] = s.folds;
  j["threshold"] = s.threshold;
  j["reduction"] = reduction_name(s.reduction);
  j["text_representation"] = text_representation_name(s.text_representation);
  j["groups"] = std::string(s.groups.begin(), s.groups.end());
  j["backend"] = backend;
  return j.dump();
}

void write_atomic(const fs::path &path, const std::string &content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

GridSummary run_grid(const Dataset &dataset, const std::vector<ExperimentConfig> &configs,
                     NlpBackend &backend, const GridOptions &opt) {
  const RunSettings &settings = opt.settings;
  auto log = [&](const std::string &m) {
    if (opt.log) opt.log(m);
  };
  const std::string started = utc_timestamp();
  fs::path dir(opt.out_dir);
  fs::create_directories(dir / "cells");

  const std::string backend_id = backend.name() + "/" + std::to_string(backend.dim());
  const std::string fingerprint = settings_fingerprint(settings, backend_id);
  fs::path run_file = dir / "run.json";
  if (fs::exists(run_file)) {
    if (trim(read_file(run_file)) != fingerprint)
      throw ConfigError(opt.out_dir + " holds a run with different settings");
  } else {
    write_atomic(run_file, fingerprint + "\n");
  }

  fs::path fold_file = dir / "folds.tsv";
  FoldAssignment folds;
  if (fs::exists(fold_file)) {
    folds = FoldAssignment::read_tsv(fold_file.string());
    if (!folds.covers(dataset)) throw ConfigError(fold_file.string() + " does not cover the dataset");
  } else {
    std::vector<std::string> titles;
    for (const auto &a : dataset.articles) titles.push_back(a.title);
    folds = FoldAssignment::make(titles, settings.folds, settings.seed);
    folds.write_tsv(fold_file.string());
  }

  GridSummary summary;
  summary.cells = configs.size();
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (fs::exists(dir / "cells" / (configs[i].key() + ".csv")))
      ++summary.skipped;
    else
      todo.push_back(i);
  }
  log(std::to_string(todo.size()) + " of " + std::to_string(configs.size()) + " cells to run");

  std::map<Strategy, CandidatePool> pools;
  for (std::size_t i : todo) {
    Strategy s = configs[i].strategy;
    if (pools.count(s)) continue;
    log(std::string("extracting ") + strategy_name(s) + " candidates");
    pools.emplace(s, build_pool(dataset, s, backend, settings.workers));
  }

  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  auto work = [&] {
    for (std::size_t n; (n = next++) < todo.size();) {
      const ExperimentConfig &cfg = configs[todo[n]];
      try {
        auto preds = cross_validate(pools.at(cfg.strategy), cfg, folds, settings);
        auto rows = score_config(cfg, preds, dataset, settings.reduction);
        std::string csv = results_csv_header() + "\n";
        for (const auto &r : rows) csv += result_csv_line(r) + "\n";
        fs::path cell = dir / "cells" / cfg.key();
        write_atomic(cell.string() + ".predictions.json", predictions_to_json(preds).dump(1) + "\n");
        write_atomic(cell.string() + ".csv", csv);
        std::lock_guard<std::mutex> lock(mutex);
        log("done " + cfg.key());
      } catch (const Error &e) {
        std::lock_guard<std::mutex> lock(mutex);
        summary.failures.push_back(cfg.key() + ": " + e.what());
        log("failed " + cfg.key() + ": " + e.what());
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < std::max(1, settings.workers); ++t) threads.emplace_back(work);
  work();
  for (auto &t : threads) t.join();
  std::sort(summary.failures.begin(), summary.failures.end());

  std::string results = results_csv_header() + "\n";
  for (const auto &cfg : configs) {
    fs::path cell = dir / "cells" / (cfg.key() + ".csv");
    if (!fs::exists(cell)) continue;
    for (auto &r : read_results_csv(cell.string())) {
      results += result_csv_line(r) + "\n";
      summary.rows.push_back(std::move(r));
    }
  }
  write_atomic(dir / "results.csv", results);
  write_atomic(dir / "report.csv", report_csv(summary.rows));
  write_atomic(dir / "report_top3.csv", report_csv(summary.rows, 3));
  write_atomic(dir / "ablation.csv", ablation_csv(summary.rows));

  RunManifest m;
  m.command = "grid";
  m.arguments = opt.arguments;
  m.config_digest = opt.config_digest;
  m.seed = settings.seed;
  m.backend = backend_id;
  m.outputs = {"results.csv", "report.csv", "report_top3.csv", "ablation.csv", "folds.tsv", "run.json"};
  m.started = started;
  m.finished = utc_timestamp();
  write_manifest(opt.out_dir, m);
  return summary;
}

}  // namespace midr
