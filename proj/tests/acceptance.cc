// Acceptance checks, one line per criterion. Full-dataset checks need
// MIDR_MFQUAD_DIR (holding dataset.json); without it they report SKIP and
// the mini-corpus forms run instead.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "midr/config.h"
#include "midr/dataset.h"
#include "midr/errors.h"
#include "midr/experiment.h"
#include "midr/text.h"
#include "midr/wikitext.h"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace midr;

namespace {

const std::string kData = MIDR_TEST_DATA;
const std::string kMini = kData + "/mini";

struct Outcome {
  enum { kPass, kFail, kSkip } status = kPass;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string &what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++n_failed_;
  }
  bool ok() const { return n_failed_ == 0; }
  std::string summary() const {
    std::string s;
    for (const auto &f : failures_) s += (s.empty() ? "" : "; ") + f;
    if (n_failed_ > failures_.size()) s += "; ...";
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t n_failed_ = 0;
};

// Criteria whose full-dataset half was skipped report SKIP even when the
// mini-corpus form passes.
Outcome verdict(const Check &c, const std::string &detail, bool skipped) {
  if (!c.ok()) return {Outcome::kFail, c.summary()};
  return {skipped ? Outcome::kSkip : Outcome::kPass, detail};
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fmt(double v, int digits = 3) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*f", digits, v);
  return b;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset mini_dataset() {
  Dataset ds = build_dataset(read_articles(kMini + "/articles.jsonl"));
  attach_annotations(ds, read_annotations(kMini + "/annotations.jsonl"));
  return ds;
}

std::optional<std::string> mfquad_dataset() {
  const char *dir = std::getenv("MIDR_MFQUAD_DIR");
  if (!dir || !*dir) return std::nullopt;
  fs::path p = fs::path(dir) / "dataset.json";
  if (!fs::exists(p)) return std::nullopt;
  return p.string();
}

std::shared_ptr<NlpBackend> reference_backend() {
  try {
    BackendOptions o;
    o.name = "reference";
    auto b = make_backend(o);
    b->segment_sentences("Probe sentence.");
    return b;
  } catch (const std::exception &) {
    return nullptr;
  }
}

fs::path scratch(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("midr_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double linear_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol + 1e-9; }

// --- 1 ---------------------------------------------------------------------

Outcome schema_fidelity() {
  auto t0 = std::chrono::steady_clock::now();
  Dataset ds = mini_dataset();
  std::string golden = slurp(kData + "/example_schema.txt");
  Check c;
  std::size_t examples = 0;
  auto doc = nlohmann::ordered_json::parse(dataset_to_json(ds));
  for (const auto &a : doc["articles"])
    for (const auto &id : a["identifiers"])
      for (const auto &ex : id["examples"]) {
        ++examples;
        if (ex["answers"].empty()) continue;
        c.expect(schema_signature(ex.dump()) == golden,
                 "schema differs for " + a["title"].get<std::string>());
      }
  auto violations = validate_dataset(ds);
  c.expect(violations.empty(), std::to_string(violations.size()) + " validation violations");
  double t = seconds_since(t0);
  c.expect(t < 5, "took " + fmt(t, 1) + " s");
  return {c.ok() ? Outcome::kPass : Outcome::kFail,
          c.ok() ? std::to_string(examples) + " examples match the golden schema, 0 violations, " +
                       fmt(t, 2) + " s"
                 : c.summary()};
}

// --- 2 ---------------------------------------------------------------------

json run_stats(const std::string &dataset, const fs::path &out, Check &c) {
  std::string cmd = std::string(MIDR_CLI) + " stats --dataset '" + dataset + "' --out '" +
                    out.string() + "' > /dev/null";
  c.expect(std::system(cmd.c_str()) == 0, "midr stats failed");
  for (const char *f : {"stats.json", "occurrence_histogram.csv", "covering_span_histogram.csv",
                        "context_length_histogram.csv", "manifest.json"})
    c.expect(fs::exists(out / f), std::string("missing ") + f);
  return json::parse(slurp(out / "stats.json"));
}

Outcome statistics() {
  Check c;
  std::string detail;
  bool skipped = true;
  if (auto full = mfquad_dataset()) {
    skipped = false;
    auto t0 = std::chrono::steady_clock::now();
    json s = run_stats(*full, scratch("stats_full"), c);
    c.expect(s["n_examples"] == 7508, "examples " + s["n_examples"].dump());
    c.expect(s["n_identifiers"] == 310, "identifiers " + s["n_identifiers"].dump());
    c.expect(s["n_articles"] == 100, "articles " + s["n_articles"].dump());
    const auto &o = s["occurrences"], &cs = s["covering_span"], &cx = s["context_length"];
    c.expect(near(o["mean"], 24.2, 0.1), "occurrence mean " + o["mean"].dump());
    c.expect(o["median"] == 9.0 && o["max"] == 422.0, "occurrence median/max");
    c.expect(near(cs["mean"], 40, 0.5) && near(cs["median"], 28, 0.5) && near(cs["max"], 262, 0.5),
             "covering span mean/median/max " + cs["mean"].dump() + "/" + cs["median"].dump() + "/" +
                 cs["max"].dump());
    c.expect(near(cs["quantile_0.975"], 164.3, 0.5), "covering span q97.5 " + cs["quantile_0.975"].dump());
    c.expect(cx["min"] == 231.0 && cx["max"] == 9119.0 && cx["median"] == 1089.0,
             "context min/max/median");
    c.expect(near(cx["mean"], 1454.92, 0.5), "context mean " + cx["mean"].dump());
    double t = seconds_since(t0);
    c.expect(t < 60, "took " + fmt(t, 1) + " s");
    detail = "full dataset: ";
  } else {
    detail = "full dataset not checked (MIDR_MFQUAD_DIR unset); ";
  }
  // Mini-corpus form: the reported numbers agree with a recount from the inputs.
  auto t0 = std::chrono::steady_clock::now();
  fs::path out = scratch("stats_mini");
  Dataset ds = mini_dataset();
  write_dataset(ds, (out / "dataset.json").string());
  json s = run_stats((out / "dataset.json").string(), out / "stats", c);
  std::size_t n_articles = 0, n_ids = 0;
  {
    std::ifstream in(kMini + "/articles.jsonl");
    for (std::string line; std::getline(in, line);)
      if (!trim(line).empty()) ++n_articles, n_ids += json::parse(line)["identifiers"].size();
  }
  std::vector<double> occ, ctx, spans;
  for (const auto &a : ds.articles)
    for (const auto &id : a.identifiers) {
      occ.push_back(static_cast<double>(id.examples.size()));
      for (const auto &ex : id.examples) {
        ctx.push_back(static_cast<double>(codepoint_count(ex.passage)));
        // brute force: shortest window of code points holding the identifier
        // and some answer outside a table
        auto tables = table_ranges(ex.passage);
        std::size_t ib = ex.id_passage_offset, ie = ib + codepoint_count(ex.matched_id_representation);
        std::optional<std::size_t> best;
        for (const auto &ans : ex.answers) {
          bool in_table = false;
          for (auto [b, e] : tables) in_table |= ans.start_pos >= b && ans.start_pos < e;
          if (in_table) continue;
          for (std::size_t i = 0; i <= std::min(ib, ans.start_pos); ++i)
            for (std::size_t j = std::max(ie, ans.end_pos); j <= codepoint_count(ex.passage); ++j)
              if (!best || j - i < *best) best = j - i;
        }
        if (best) spans.push_back(static_cast<double>(*best));
      }
    }
  double n_examples = 0;
  for (double v : occ) n_examples += v;
  c.expect(s["n_articles"] == n_articles, "articles");
  c.expect(s["n_identifiers"] == n_ids, "identifiers");
  c.expect(s["n_examples"].get<double>() == n_examples, "examples");
  auto same = [&](const json &j, const std::vector<double> &v, const std::string &name) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    c.expect(near(j["mean"], mean, 1e-9), name + " mean");
    c.expect(near(j["median"], linear_quantile(v, 0.5), 1e-9), name + " median");
    c.expect(j["max"] == *std::max_element(v.begin(), v.end()), name + " max");
    c.expect(j["min"] == *std::min_element(v.begin(), v.end()), name + " min");
    c.expect(near(j["quantile_0.975"], linear_quantile(v, 0.975), 1e-9), name + " q97.5");
  };
  same(s["occurrences"], occ, "occurrence");
  same(s["context_length"], ctx, "context");
  same(s["covering_span"], spans, "covering span");
  double t = seconds_since(t0);
  c.expect(t < 60, "took " + fmt(t, 1) + " s");
  detail += "mini-corpus stats agree with a recount (" + s["n_examples"].dump() + " examples, " +
            std::to_string(spans.size()) + " covering spans)";
  return verdict(c, detail, skipped);
}

// --- 3 ---------------------------------------------------------------------

Outcome taxonomy() {
  Check c;
  std::string detail;
  bool skipped = true;
  if (auto full = mfquad_dataset()) {
    skipped = false;
    DatasetStats st = compute_stats(read_dataset(*full));
    c.expect(st.described_identifiers == 224, "described " + std::to_string(st.described_identifiers));
    c.expect(st.explicit_identifiers == 175, "explicit " + std::to_string(st.explicit_identifiers));
    c.expect(st.implicit_only_identifiers == 49, "implicit-only " + std::to_string(st.implicit_only_identifiers));
    c.expect(st.undescribed_identifiers == 86, "undescribed " + std::to_string(st.undescribed_identifiers));
    auto listed = read_identifier_list(std::string(MIDR_SOURCE_DIR) + "/data/implicit_identifiers.tsv");
    std::set<std::pair<std::string, std::string>> want, got(st.implicit_identifiers.begin(),
                                                           st.implicit_identifiers.end());
    for (const auto &[t, id] : listed) want.insert({t, normalize_identifier(id)});
    c.expect(want == got, "implicit identifiers differ from the published list");
    detail = "full dataset: 224/175/49/86; ";
  } else {
    detail = "full dataset not checked (MIDR_MFQUAD_DIR unset); ";
  }
  // Mini-corpus form: recount from the raw annotation records.
  Dataset ds = mini_dataset();
  DatasetStats st = compute_stats(ds);
  std::map<std::pair<std::string, std::string>, bool> described;  // -> has explicit
  std::size_t total = 0;
  {
    std::ifstream in(kMini + "/articles.jsonl");
    for (std::string line; std::getline(in, line);)
      if (!trim(line).empty()) total += json::parse(line)["identifiers"].size();
    std::ifstream an(kMini + "/annotations.jsonl");
    for (std::string line; std::getline(an, line);) {
      if (trim(line).empty()) continue;
      json r = json::parse(line);
      // numeric values are not descriptions and are dropped from the dataset
      if (is_numeric_text(trim(r["deduced_answer"].get<std::string>()))) continue;
      auto key = std::make_pair(r["article"].get<std::string>(),
                                normalize_identifier(r["identifier"].get<std::string>()));
      described[key] = described[key] || r["explicit"].get<bool>();
    }
  }
  std::size_t explicit_ = 0;
  std::set<std::pair<std::string, std::string>> implicit;
  for (const auto &[k, e] : described) e ? ++explicit_ : (implicit.insert(k), 0);
  std::set<std::pair<std::string, std::string>> got(st.implicit_identifiers.begin(),
                                                   st.implicit_identifiers.end());
  c.expect(st.described_identifiers == described.size(), "described");
  c.expect(st.explicit_identifiers == explicit_, "explicit");
  c.expect(st.implicit_only_identifiers == implicit.size(), "implicit-only");
  c.expect(st.undescribed_identifiers == total - described.size(), "undescribed");
  c.expect(got == implicit, "implicit list");
  c.expect(st.described_identifiers == st.explicit_identifiers + st.implicit_only_identifiers,
           "described = explicit + implicit-only");
  detail += "mini-corpus " + std::to_string(described.size()) + "/" + std::to_string(explicit_) + "/" +
            std::to_string(implicit.size()) + "/" + std::to_string(total - described.size()) +
            " matches the annotation recount";
  return verdict(c, detail, skipped);
}

// --- 4 ---------------------------------------------------------------------

Outcome candidate_counts() {
  Check c;
  std::string detail;
  auto full = mfquad_dataset();
  auto reference = full ? reference_backend() : nullptr;
  bool skipped = !(full && reference);
  if (full && reference) {
    Dataset ds = read_dataset(*full);
    std::map<Strategy, std::pair<double, double>> want{{Strategy::kNNAN, {1307, 9976}},
                                                       {Strategy::kNC, {1067, 10824}}};
    for (const auto &[st, counts] : want) {
      double pos = 0, neg = 0;
      for (const auto &a : ds.articles)
        for (const auto &id : a.identifiers)
          for (const auto &ex : id.examples) {
            auto cands = example_candidates(prepare_example(a.title, id.identifier, ex, *reference), st);
            label_candidates(cands, gold_surfaces(ex));
            for (const auto &cd : cands) (cd.label == Label::kPositive ? pos : neg) += 1;
          }
      c.expect(std::fabs(pos - counts.first) <= 0.1 * counts.first,
               std::string(strategy_name(st)) + " positives " + fmt(pos, 0));
      c.expect(std::fabs(neg - counts.second) <= 0.1 * counts.second,
               std::string(strategy_name(st)) + " negatives " + fmt(neg, 0));
      detail += std::string(strategy_name(st)) + " " + fmt(pos, 0) + "/" + fmt(neg, 0) + "; ";
    }
  } else {
    detail = full ? "full dataset not checked (reference backend unavailable); "
                  : "full dataset not checked (MIDR_MFQUAD_DIR unset); ";
  }
  // Mini-corpus form: labels equal a brute-force span oracle.
  Dataset ds = mini_dataset();
  StubBackend backend;
  std::size_t spans = 0, labelled = 0;
  for (Strategy st : {Strategy::kNNAN, Strategy::kNC})
    for (const auto &a : ds.articles)
      for (const auto &id : a.identifiers)
        for (const auto &ex : id.examples) {
          ExampleContext ctx = prepare_example(a.title, id.identifier, ex, backend);
          auto cands = example_candidates(ctx, st);
          auto golds = gold_surfaces(ex);
          label_candidates(cands, golds);
          std::vector<std::string> ng;
          for (const auto &g : golds) ng.push_back(normalize_description(g));
          std::map<std::pair<std::size_t, std::size_t>, const Candidate *> by_span;
          for (const auto &cd : cands) by_span[{cd.char_start, cd.char_end}] = &cd;
          for (const auto &sent : ctx.sentences) {
            if (sent.identifier_tokens.empty()) continue;
            const auto &toks = sent.analysis.tokens;
            for (std::size_t b = 0; b < toks.size(); ++b)
              for (std::size_t e = b + 1; e <= toks.size(); ++e) {
                std::size_t cs = sent.span.first + toks[b].char_start;
                std::size_t ce = sent.span.first + toks[e - 1].char_end;
                std::string norm = normalize_description(ctx.surface.text.substr(cs, ce - cs));
                bool oracle = false;
                for (const auto &g : ng) oracle |= !norm.empty() && g.find(norm) != std::string::npos;
                ++spans;
                auto it = by_span.find({cs, ce});
                if (it == by_span.end()) continue;
                ++labelled;
                c.expect((it->second->label == Label::kPositive) == oracle,
                         a.title + "/" + id.identifier + ": label of '" + it->second->text + "'");
              }
          }
          c.expect(by_span.size() == cands.size(), "duplicate candidate spans");
        }
  c.expect(labelled > 0, "no candidates checked");
  detail += "mini-corpus labels of " + std::to_string(labelled) + " candidates agree with the oracle over " +
            std::to_string(spans) + " spans";
  return verdict(c, detail, skipped);
}

// --- 5 and 8 ---------------------------------------------------------------

struct GridRun {
  GridSummary summary;
  double seconds = 0;
  std::string results;
};

GridRun run_subgrid(const Dataset &ds, NlpBackend &backend, const fs::path &dir, int workers) {
  GridOptions opt;
  opt.out_dir = dir.string();
  opt.settings.workers = workers;
  auto t0 = std::chrono::steady_clock::now();
  GridRun r;
  r.summary = run_grid(ds, load_grid(std::string(MIDR_SOURCE_DIR) + "/data/grids/smoke16.cfg"), backend, opt);
  r.seconds = seconds_since(t0);
  r.results = slurp(dir / "results.csv");
  return r;
}

// Implicit identifiers whose deduced description some candidate reproduces
// word for word; extractive EM cannot exceed their share.
double implicit_em_bound(const Dataset &ds, Strategy st, NlpBackend &backend) {
  auto members = grouping_members(ds, Grouping::kImplicit);
  auto golds = identifier_golds(ds);
  std::size_t reachable = 0;
  for (const auto &a : ds.articles)
    for (const auto &id : a.identifiers) {
      IdentifierKey key{a.title, id.identifier};
      if (!members.count(key)) continue;
      bool hit = false;
      for (const auto &ex : id.examples) {
        for (const auto &cd : example_candidates(prepare_example(a.title, id.identifier, ex, backend), st))
          for (const auto &g : golds[key]) hit |= em_score(cd.text, {g}, true) == 1;
      }
      reachable += hit;
    }
  return members.empty() ? 0.0 : static_cast<double>(reachable) / static_cast<double>(members.size());
}

Outcome result_table(const GridRun &smoke, const Dataset &mini, NlpBackend &stub) {
  Check c;
  std::string detail;
  auto full = mfquad_dataset();
  auto reference = full ? reference_backend() : nullptr;
  bool skipped = !(full && reference);
  if (full && reference) {
    Dataset ds = read_dataset(*full);
    std::vector<ExperimentConfig> cfgs{{Strategy::kNNAN, 1, 0, false, ModelKind::kSvmSota}};
    for (const auto &g : full_grid())
      if (g.model == ModelKind::kGbm) cfgs.push_back(g);
    GridOptions opt;
    opt.out_dir = scratch("grid_full").string();
    auto t0 = std::chrono::steady_clock::now();
    GridSummary s = run_grid(ds, cfgs, *reference, opt);
    c.expect(s.failures.empty(), std::to_string(s.failures.size()) + " failed cells");
    double best_gbm = 0, sota_f1 = -1, sota_em = -1;
    for (const auto &r : s.rows) {
      if (r.grouping == "implicit") c.expect(r.em == 0.0, "implicit EM " + fmt(r.em) + " for " + r.model);
      if (r.model == "GBM" && r.grouping == "all") best_gbm = std::max(best_gbm, r.f1);
      if (r.model == "SVM_SOTA" && r.grouping == "explicit") sota_f1 = r.f1, sota_em = r.em;
    }
    c.expect(near(sota_f1, 0.625, 0.05), "SOTA explicit F1 " + fmt(sota_f1));
    c.expect(near(sota_em, 0.491, 0.05), "SOTA explicit EM " + fmt(sota_em));
    c.expect(near(best_gbm, 0.529, 0.05), "best GBM all F1 " + fmt(best_gbm));
    detail = "full dataset: SOTA explicit " + fmt(sota_em) + "/" + fmt(sota_f1) + ", best GBM all F1 " +
             fmt(best_gbm) + " in " + fmt(seconds_since(t0) / 60, 1) + " min; ";
  } else {
    detail = full ? "full dataset not checked (reference backend unavailable); "
                  : "full dataset not checked (MIDR_MFQUAD_DIR unset); ";
  }
  // Mini-corpus form: the 16-cell smoke grid finishes within 10 minutes with
  // four grouping rows per cell, and implicit EM stays within what spans can
  // reach.
  c.expect(smoke.summary.failures.empty(), std::to_string(smoke.summary.failures.size()) + " failed cells");
  c.expect(smoke.summary.rows.size() == 64, std::to_string(smoke.summary.rows.size()) + " rows");
  c.expect(smoke.seconds <= 600, "smoke grid took " + fmt(smoke.seconds, 0) + " s");
  std::map<std::string, double> bound;
  for (Strategy st : {Strategy::kNNAN, Strategy::kNC})
    bound[strategy_name(st)] = implicit_em_bound(mini, st, stub);
  double worst = 0;
  for (const auto &r : smoke.summary.rows)
    if (r.grouping == "implicit") {
      worst = std::max(worst, r.em);
      c.expect(r.em <= bound[r.strategy] + 1e-12, "implicit EM " + fmt(r.em) + " above the reachable share");
    }
  detail += "mini-corpus 16-cell grid in " + fmt(smoke.seconds, 0) + " s, implicit EM <= " +
            fmt(std::max(bound["NNAN"], bound["NC"])) + " reachable (max seen " + fmt(worst) + ")";
  return verdict(c, detail, skipped);
}

Outcome determinism(const GridRun &a, const GridRun &b, const fs::path &da, const fs::path &db) {
  Check c;
  c.expect(!a.results.empty() && a.results == b.results, "results.csv differs");
  for (const char *f : {"report.csv", "ablation.csv", "folds.tsv"})
    c.expect(slurp(da / f) == slurp(db / f), std::string(f) + " differs");
  std::size_t cells = 0;
  for (const auto &e : fs::directory_iterator(da / "cells")) {
    ++cells;
    c.expect(slurp(e.path()) == slurp(db / "cells" / e.path().filename()),
             e.path().filename().string() + " differs");
  }
  return {c.ok() ? Outcome::kPass : Outcome::kFail,
          c.ok() ? "two 16-cell runs (1 and 2 workers) give byte-identical results.csv and " +
                       std::to_string(cells) + " cell files"
                 : c.summary()};
}

// --- 6 ---------------------------------------------------------------------

Outcome scorer() {
  Check c;
  json cases = json::parse(slurp(kData + "/scorer_cases.json"));
  c.expect(cases.size() == 20, "fixture has " + std::to_string(cases.size()) + " cases");
  std::size_t null_cases = 0;
  for (const auto &k : cases) {
    std::optional<std::string> pred;
    if (!k["prediction"].is_null()) pred = k["prediction"].get<std::string>();
    auto golds = k["golds"].get<std::vector<std::string>>();
    bool has_gold = k["has_gold"].get<bool>();
    int em = em_score(pred, golds, has_gold);
    double f1 = f1_score(pred, golds, has_gold);
    std::string name = k.value("name", k.dump());
    c.expect(em == k["em"].get<int>(), name + ": EM");
    c.expect(f1 == k["f1"].get<double>(), name + ": F1 " + fmt(f1, 17));
    c.expect(em <= f1, name + ": EM > F1");
    if (!pred && !has_gold) {
      ++null_cases;
      c.expect(em == 1 && f1 == 1.0, name + ": NULL agreement");
    }
  }
  c.expect(null_cases > 0, "no NULL agreement case in the fixture");
  return {c.ok() ? Outcome::kPass : Outcome::kFail,
          c.ok() ? "20 cases match the oracle exactly, EM <= F1, " + std::to_string(null_cases) +
                       " NULL agreement case(s) score 1"
                 : c.summary()};
}

// --- 7 ---------------------------------------------------------------------

Outcome leakage(const Dataset &mini) {
  Check c;
  const std::string sentinel = "zqxsentinel";
  std::vector<std::string> titles;
  for (const auto &a : mini.articles) titles.push_back(a.title);
  FoldAssignment folds = FoldAssignment::make(titles, 5, 42);
  const int test_fold = folds.fold_of(titles.front());

  // The sentinel goes in front of every identifier occurrence of the test fold.
  Dataset poisoned = mini;
  std::size_t inserted = 0;
  for (auto &a : poisoned.articles) {
    if (folds.fold_of(a.title) != test_fold) continue;
    for (auto &id : a.identifiers)
      for (auto &ex : id.examples) {
        CodepointIndex index(ex.passage);
        std::size_t off = index.byte_at(ex.id_passage_offset), at = off;
        if (ex.between_math_tags) at = ex.passage.rfind("<math", off);
        if (at == std::string::npos) at = off;
        const std::size_t at_cp = index.cp_at(at), shift = codepoint_count(sentinel) + 1;
        ex.passage.insert(at, sentinel + " ");
        ex.id_passage_offset += shift;
        for (auto &ans : ex.answers)
          if (ans.start_pos >= at_cp) ans.start_pos += shift, ans.end_pos += shift;
        ++inserted;
      }
  }
  StubBackend backend(16);
  CandidatePool pool = build_pool(poisoned, Strategy::kNNAN, backend);
  std::size_t poisoned_rows = 0;
  for (const auto &r : pool.rows)
    for (const auto &[slot, terms] : r.features.sequences)
      if (std::find(terms.begin(), terms.end(), sentinel) != terms.end()) {
        ++poisoned_rows;
        break;
      }
  c.expect(poisoned_rows > 0, "sentinel never reached a feature");
  RunSettings settings;
  for (ModelKind m : all_models()) {
    std::vector<FoldTrace> trace;
    cross_validate(pool, {Strategy::kNNAN, 2, 0, false, m}, folds, settings, &trace);
    bool seen = false;
    for (const auto &t : trace)
      if (t.fold == test_fold) {
        seen = true;
        std::size_t cols = 0;
        for (const auto &name : t.columns) cols += name.find(sentinel) != std::string::npos;
        c.expect(cols == 0, std::string(model_name(m)) + ": " + std::to_string(cols) + " sentinel columns");
        for (auto r : t.train_rows)
          c.expect(folds.fold_of(pool.examples[pool.rows[r].example].article) != test_fold,
                   std::string(model_name(m)) + ": trained on a test-fold row");
      }
    c.expect(seen, std::string(model_name(m)) + ": test fold never trained");
  }
  return {c.ok() ? Outcome::kPass : Outcome::kFail,
          c.ok() ? "sentinel in " + std::to_string(inserted) + " test-fold passages (" +
                       std::to_string(poisoned_rows) + " candidate rows) yields 0 columns for all 5 models"
                 : c.summary()};
}

// --- 9 ---------------------------------------------------------------------

Outcome stub_suite() {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  std::istringstream list(MIDR_UNIT_TESTS);
  std::size_t n = 0;
  for (std::string exe; std::getline(list, exe, ',');) {
    if (exe.empty()) continue;
    ++n;
    std::string cmd = "MIDR_BACKEND=stub '" + exe + "' > /dev/null 2>&1";
    c.expect(std::system(cmd.c_str()) == 0, fs::path(exe).filename().string() + " failed");
  }
  double t = seconds_since(t0);
  c.expect(t < 120, "took " + fmt(t, 0) + " s");
  return {c.ok() ? Outcome::kPass : Outcome::kFail,
          c.ok() ? std::to_string(n) + " unit suites pass with the stub backend in " + fmt(t, 1) + " s"
                 : c.summary()};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int n, const std::function<Outcome()> &f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception &e) {
      o = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const char *tag = o.status == Outcome::kPass ? "PASS" : o.status == Outcome::kFail ? "FAIL" : "SKIP";
    failed += o.status == Outcome::kFail;
    std::cout << "criterion " << n << ": " << tag << ": " << o.detail << std::endl;
  };

  Dataset mini = mini_dataset();
  StubBackend stub;
  GridRun first, second;
  fs::path da = scratch("grid_a"), db = scratch("grid_b");
  std::string grid_error;
  try {
    first = run_subgrid(mini, stub, da, 1);
    second = run_subgrid(mini, stub, db, 2);
  } catch (const std::exception &e) {
    grid_error = e.what();
  }
  auto grid_ok = [&]() -> std::optional<Outcome> {
    if (grid_error.empty()) return std::nullopt;
    return Outcome{Outcome::kFail, "grid run failed: " + grid_error};
  };

  report(1, schema_fidelity);
  report(2, statistics);
  report(3, taxonomy);
  report(4, candidate_counts);
  report(5, [&] { return grid_ok() ? *grid_ok() : result_table(first, mini, stub); });
  report(6, scorer);
  report(7, [&] { return leakage(mini); });
  report(8, [&] { return grid_ok() ? *grid_ok() : determinism(first, second, da, db); });
  report(9, stub_suite);
  return failed == 0 ? 0 : 1;
}
