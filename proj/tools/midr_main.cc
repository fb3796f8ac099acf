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

#include <cstdlib>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "midr/config.h"
#include "midr/dataset.h"
#include "midr/errors.h"
#include "midr/experiment.h"
#include "midr/manifest.h"
#include "midr/text.h"

namespace fs = std::filesystem;
using namespace midr;

namespace {

struct Flags {
  std::string dataset, articles, annotations, out, config, grid, grouping = "all", pred;
  std::string backend, strategy = "NNAN", model = "SVM_SOTA", pca = "none";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  int sampling_factor = 1;
  bool word_vectors = false;
  std::vector<std::string> argv;
};

struct Context {
  MidrConfig config;
  RunManifest manifest;
};

Context setup(const std::string &command, const Flags &f) {
  Context c;
  c.config = load_config(f.config);
  if (f.seed) c.config.run.seed = *f.seed;
  if (f.workers) {
    if (*f.workers < 1) throw ConfigError("--workers must be at least 1");
    c.config.run.workers = *f.workers;
  }
  if (!f.backend.empty()) c.config.run.backend.name = f.backend;
  c.manifest.command = command;
  c.manifest.arguments = f.argv;
  c.manifest.config_digest = c.config.digest;
  c.manifest.seed = c.config.run.seed;
  c.manifest.started = utc_timestamp();
  return c;
}

void finish(Context &c, const std::string &dir) {
  c.manifest.finished = utc_timestamp();
  write_manifest(dir, c.manifest);
}

std::string prepare_out(const std::string &out) {
  if (out.empty()) throw ConfigError("--out is required");
  fs::create_directories(out);
  return out;
}

void write_text(const std::string &dir, const std::string &name, const std::string &text,
                Context &c) {
  std::ofstream o(fs::path(dir) / name, std::ios::binary);
  if (!o) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
  o << text;
  c.manifest.outputs.push_back(name);
}

Dataset load_dataset(const Flags &f) {
  if (f.dataset.empty()) throw ConfigError("--dataset is required");
  if (!fs::exists(f.dataset)) throw ConfigError("no such dataset " + f.dataset);
  return read_dataset(f.dataset);
}

std::shared_ptr<NlpBackend> backend_for(Context &c) {
  auto b = make_backend(c.config.run.backend);
  c.manifest.backend = b->name() + "/" + std::to_string(b->dim());
  return b;
}

std::string violations_tsv(const std::vector<Violation> &vs) {
  std::string s = "article\tidentifier\toccurrence\tmessage\n";
  for (const auto &v : vs)
    s += v.article + "\t" + v.identifier + "\t" + std::to_string(v.occurrence) + "\t" + v.message + "\n";
  return s;
}

std::vector<Strategy> strategies(const std::string &name) {
  if (to_lower(name) == "both") return {Strategy::kNNAN, Strategy::kNC};
  return {parse_strategy(name)};
}

int cmd_build_dataset(const Flags &f) {
  Context c = setup("build-dataset", f);
  if (f.articles.empty()) throw ConfigError("--articles is required");
  std::string out = prepare_out(f.out);
  std::optional<MathLexicon> lexicon;
  if (!c.config.lexicon.empty()) lexicon = MathLexicon::load(c.config.lexicon);
  BuildOptions bo;
  bo.digest_algorithm = c.config.digest_algorithm;
  bo.half_width = c.config.half_width;
  bo.mini_context = c.config.mini_context;
  if (lexicon) bo.lexicon = &*lexicon;
  Dataset ds = build_dataset(read_articles(f.articles), bo);
  if (!f.annotations.empty()) {
    AttachOptions ao;
    ao.keep_numeric = c.config.keep_numeric;
    if (lexicon) ao.lexicon = &*lexicon;
    attach_annotations(ds, read_annotations(f.annotations), ao);
  }
  write_dataset(ds, (fs::path(out) / "dataset.json").string());
  c.manifest.outputs.push_back("dataset.json");
  auto vs = validate_dataset(ds);
  write_text(out, "violations.tsv", violations_tsv(vs), c);
  finish(c, out);
  std::cerr << "midr: " << ds.articles.size() << " articles, " << vs.size() << " violations\n";
  return vs.empty() ? 0 : 1;
}

int cmd_validate(const Flags &f) {
  Context c = setup("validate", f);
  Dataset ds = load_dataset(f);
  auto vs = validate_dataset(ds);
  std::string tsv = violations_tsv(vs);
  if (!f.out.empty()) {
    std::string out = prepare_out(f.out);
    write_text(out, "violations.tsv", tsv, c);
    finish(c, out);
  }
  std::cout << tsv;
  return vs.empty() ? 0 : 1;
}

int cmd_stats(const Flags &f) {
  Context c = setup("stats", f);
  Dataset ds = load_dataset(f);
  std::string out = prepare_out(f.out);
  DatasetStats st = compute_stats(ds);
  write_stats(st, out);
  for (const auto &e : fs::directory_iterator(out))
    if (e.path().filename() != "manifest.json") c.manifest.outputs.push_back(e.path().filename().string());
  std::sort(c.manifest.outputs.begin(), c.manifest.outputs.end());
  finish(c, out);
  std::cout << stats_to_json(st) << "\n";
  return 0;
}

int cmd_candidates(const Flags &f) {
  Context c = setup("candidates", f);
  Dataset ds = load_dataset(f);
  std::string out = prepare_out(f.out);
  auto backend = backend_for(c);
  for (Strategy s : strategies(f.strategy)) {
    std::vector<CandidateRow> rows;
    for (const auto &a : ds.articles)
      for (const auto &id : a.identifiers)
        for (const auto &ex : id.examples) {
          auto ctx = prepare_example(a.title, id.identifier, ex, *backend);
          auto cands = example_candidates(ctx, s);
          label_candidates(cands, gold_surfaces(ex));
          for (auto &cd : cands) rows.push_back({a.title, id.identifier, ex.occurrence, std::move(cd)});
        }
    std::size_t pos = 0;
    for (const auto &r : rows) pos += r.candidate.label == Label::kPositive;
    std::cout << strategy_name(s) << "\t" << pos << " positive\t" << rows.size() - pos << " negative\n";
    write_text(out, std::string("candidates_") + strategy_name(s) + ".csv", candidates_csv(rows), c);
  }
  finish(c, out);
  return 0;
}

int cmd_featurize(const Flags &f) {
  Context c = setup("featurize", f);
  Dataset ds = load_dataset(f);
  std::string out = prepare_out(f.out);
  auto backend = backend_for(c);
  ExperimentConfig cfg;
  cfg.word_vectors = f.word_vectors;
  for (Strategy s : strategies(f.strategy)) {
    cfg.strategy = s;
    CandidatePool pool = build_pool(ds, s, *backend, c.config.run.workers);
    std::vector<RawFeatures> raw;
    std::vector<CandidateRow> rows;
    for (const auto &r : pool.rows) {
      raw.push_back(r.features);
      const auto &ex = pool.examples[r.example];
      rows.push_back({ex.article, ex.identifier, ex.occurrence, r.candidate});
    }
    FeatureConfig fc = feature_config(cfg, c.config.run);
    Vocabulary vocab = Vocabulary::fit(raw, fc, pool.vector_dim);
    FeatureMatrix m = vocab.transform(raw);
    std::string columns = "name,group,description\n";
    for (const auto &col : m.columns)
      columns += csv_field(col.name) + "," + std::string(1, col.group) + "," + csv_field(col.description) + "\n";
    const std::string tag = strategy_name(s);
    write_text(out, "features_" + tag + ".csv", feature_matrix_csv(m), c);
    write_text(out, "columns_" + tag + ".csv", columns, c);
    write_text(out, "rows_" + tag + ".csv", candidates_csv(rows), c);
    std::cout << tag << "\t" << m.values.rows() << " rows\t" << m.values.cols() << " columns\n";
  }
  finish(c, out);
  return 0;
}

ExperimentConfig single_config(const Flags &f) {
  ExperimentConfig cfg;
  cfg.strategy = parse_strategy(f.strategy);
  cfg.model = parse_model(f.model);
  cfg.sampling_factor = f.sampling_factor;
  if (cfg.sampling_factor < 1) throw ConfigError("--sampling-factor must be at least 1");
  if (to_lower(f.pca) != "none") {
    try {
      cfg.pca = std::stoi(f.pca);
    } catch (const std::exception &) {
      throw ConfigError("--pca expects none or a component count");
    }
    if (cfg.pca < 1) throw ConfigError("--pca expects none or a positive count");
  }
  cfg.word_vectors = f.word_vectors;
  return cfg;
}

int cmd_train(const Flags &f) {
  Context c = setup("train", f);
  ExperimentConfig cfg = single_config(f);
  Dataset ds = load_dataset(f);
  std::string out = prepare_out(f.out);
  auto backend = backend_for(c);
  std::vector<std::string> titles;
  for (const auto &a : ds.articles) titles.push_back(a.title);
  FoldAssignment folds = FoldAssignment::make(titles, c.config.run.folds, c.config.run.seed);
  folds.write_tsv((fs::path(out) / "folds.tsv").string());
  c.manifest.outputs.push_back("folds.tsv");
  CandidatePool pool = build_pool(ds, cfg.strategy, *backend, c.config.run.workers);
  auto preds = cross_validate(pool, cfg, folds, c.config.run);
  write_predictions((fs::path(out) / "predictions.json").string(), preds);
  c.manifest.outputs.push_back("predictions.json");
  std::string csv = results_csv_header() + "\n";
  for (const auto &r : score_config(cfg, preds, ds, c.config.run.reduction)) csv += result_csv_line(r) + "\n";
  write_text(out, "results.csv", csv, c);
  finish(c, out);
  std::cout << csv;
  return 0;
}

int cmd_grid(const Flags &f) {
  Context c = setup("grid", f);
  if (f.grid.empty()) throw ConfigError("--grid is required");
  auto configs = load_grid(f.grid);
  Dataset ds = load_dataset(f);
  std::string out = prepare_out(f.out.empty() ? "grid_out" : f.out);
  auto backend = backend_for(c);
  GridOptions opt;
  opt.out_dir = out;
  opt.settings = c.config.run;
  opt.config_digest = c.config.digest;
  opt.arguments = f.argv;
  opt.log = [](const std::string &m) { std::cerr << "midr: " << m << "\n"; };
  GridSummary s = run_grid(ds, configs, *backend, opt);
  std::cerr << "midr: " << s.cells << " cells, " << s.skipped << " reused, " << s.failures.size()
            << " failed\n";
  for (const auto &e : s.failures) std::cerr << "midr: failed " << e << "\n";
  return s.failures.empty() ? 0 : 1;
}

int cmd_score(const Flags &f) {
  Context c = setup("score", f);
  if (f.pred.empty()) throw ConfigError("--pred is required");
  Dataset ds = load_dataset(f);
  Grouping g = parse_grouping(f.grouping);
  auto preds = read_predictions(f.pred);
  EvalRow e = evaluate(preds, ds, g, c.config.run.reduction);
  char line[128];
  std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%zu\n", grouping_name(g), e.em, e.f1, e.n_identifiers);
  std::string csv = std::string("grouping,em,f1,n_identifiers\n") + line;
  if (!f.out.empty()) {
    std::string out = prepare_out(f.out);
    write_text(out, "score.csv", csv, c);
    finish(c, out);
  }
  std::cout << csv;
  return 0;
}

void common(CLI::App *sub, Flags &f) {
  sub->add_option("--config", f.config, "configuration file");
  sub->add_option("--seed", f.seed, "random seed (overrides the config)");
  sub->add_option("--workers", f.workers, "worker threads");
  sub->add_option("--backend", f.backend, "NLP backend: stub or reference (MIDR_BACKEND wins)");
}

}  // namespace

int main(int argc, char **argv) {
  Flags f;
  for (int i = 1; i < argc; ++i) f.argv.emplace_back(argv[i]);

  CLI::App app{"midr: identifier description reading pipeline"};
  app.require_subcommand(1);
  auto *build = app.add_subcommand("build-dataset", "build the dataset from articles and annotations");
  build->add_option("--articles", f.articles, "articles JSON lines")->required();
  build->add_option("--annotations", f.annotations, "annotations JSON lines");
  build->add_option("--out", f.out, "output directory")->required();
  auto *validate = app.add_subcommand("validate", "check dataset invariants");
  validate->add_option("--dataset", f.dataset)->required();
  validate->add_option("--out", f.out);
  auto *stats = app.add_subcommand("stats", "dataset statistics and histograms");
  stats->add_option("--dataset", f.dataset)->required();
  stats->add_option("--out", f.out)->required();
  auto *cands = app.add_subcommand("candidates", "dump labelled candidates");
  cands->add_option("--dataset", f.dataset)->required();
  cands->add_option("--out", f.out)->required();
  cands->add_option("--strategy", f.strategy, "NNAN, NC or both");
  auto *feat = app.add_subcommand("featurize", "dump the feature matrix");
  feat->add_option("--dataset", f.dataset)->required();
  feat->add_option("--out", f.out)->required();
  feat->add_option("--strategy", f.strategy, "NNAN, NC or both");
  feat->add_flag("--word-vectors", f.word_vectors);
  auto *train = app.add_subcommand("train", "cross-validate one configuration");
  train->add_option("--dataset", f.dataset)->required();
  train->add_option("--out", f.out)->required();
  train->add_option("--strategy", f.strategy);
  train->add_option("--model", f.model, "SVM_SOTA, SVM_def, GBM, RF or VC");
  train->add_option("--sampling-factor", f.sampling_factor);
  train->add_option("--pca", f.pca, "none or a component count");
  train->add_flag("--word-vectors", f.word_vectors);
  auto *grid = app.add_subcommand("grid", "run a configuration grid");
  grid->add_option("--dataset", f.dataset)->required();
  grid->add_option("--grid", f.grid)->required();
  grid->add_option("--out", f.out);
  auto *score = app.add_subcommand("score", "score predictions");
  score->add_option("--pred", f.pred)->required();
  score->add_option("--dataset", f.dataset)->required();
  score->add_option("--grouping", f.grouping, "all, explicit, implicit or any");
  score->add_option("--out", f.out);
  for (auto *s : {build, validate, stats, cands, feat, train, grid, score}) common(s, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << app.help();
    return 2;
  }
  try {
    if (*build) return cmd_build_dataset(f);
    if (*validate) return cmd_validate(f);
    if (*stats) return cmd_stats(f);
    if (*cands) return cmd_candidates(f);
    if (*feat) return cmd_featurize(f);
    if (*train) return cmd_train(f);
    if (*grid) return cmd_grid(f);
    if (*score) return cmd_score(f);
  } catch (const ConfigError &e) {
    std::cerr << "midr: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const BackendUnavailable &e) {
    std::cerr << "midr: backend unavailable: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "midr: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
