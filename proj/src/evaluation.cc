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

#include "midr/evaluation.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "midr/errors.h"
#include "midr/text.h"

namespace midr {

namespace {

bool ascii_punct(char32_t c) {
  return c < 128 && std::ispunct(static_cast<int>(c));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string squad_normalize(std::string_view text) {
  std::string lower = to_lower(text);
  std::string nopunct;
  for (std::size_t i = 0; i < lower.size();) {
    std::size_t len;
    char32_t c = decode_utf8(lower, i, &len);
    if (!ascii_punct(c)) nopunct.append(lower, i, len);
    i += len;
  }
  // drop a/an/the delimited by non-word characters, as the \b regex does
  std::string noart;
  for (std::size_t i = 0; i < nopunct.size();) {
    std::size_t len;
    char32_t c = decode_utf8(nopunct, i, &len);
    if (!is_word_codepoint(c)) {
      noart.append(nopunct, i, len);
      i += len;
      continue;
    }
    std::size_t j = i;
    while (j < nopunct.size()) {
      std::size_t l2;
      if (!is_word_codepoint(decode_utf8(nopunct, j, &l2))) break;
      j += l2;
    }
    std::string_view word(nopunct.data() + i, j - i);
    if (word == "a" || word == "an" || word == "the")
      noart += ' ';
    else
      noart += word;
    i = j;
  }
  std::string out;
  for (const auto &w : split_whitespace(noart)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<std::string> squad_tokens(std::string_view text) {
  return split_whitespace(squad_normalize(text));
}

int em_score(const std::optional<std::string> &prediction, const std::vector<std::string> &golds,
             bool has_gold) {
  if (!has_gold) return prediction ? 0 : 1;
  if (!prediction) return 0;
  std::string p = squad_normalize(*prediction);
  for (const auto &g : golds)
    if (squad_normalize(g) == p) return 1;
  return 0;
}

double f1_score(const std::optional<std::string> &prediction,
                const std::vector<std::string> &golds, bool has_gold) {
  if (!has_gold) return prediction ? 0.0 : 1.0;
  if (!prediction) return 0.0;
  auto pt = squad_tokens(*prediction);
  double best = 0;
  for (const auto &g : golds) {
    auto gt = squad_tokens(g);
    double f;
    if (pt.empty() || gt.empty()) {
      f = pt == gt ? 1.0 : 0.0;
    } else {
      std::map<std::string, int> count;
      for (const auto &t : gt) ++count[t];
      int same = 0;
      for (const auto &t : pt)
        if (count[t] > 0) --count[t], ++same;
      if (same == 0) {
        f = 0;
      } else {
        double precision = static_cast<double>(same) / static_cast<double>(pt.size());
        double recall = static_cast<double>(same) / static_cast<double>(gt.size());
        f = 2 * precision * recall / (precision + recall);
      }
    }
    best = std::max(best, f);
  }
  return best;
}

nlohmann::ordered_json predictions_to_json(const std::vector<RankedPrediction> &predictions) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto &p : predictions) {
    nlohmann::ordered_json j;
    j["article"] = p.article;
    j["identifier"] = p.identifier;
    j["occurrence"] = p.occurrence;
    j["top_prediction"] = p.top_prediction ? nlohmann::ordered_json(*p.top_prediction) : nullptr;
    j["top_nonnull"] = p.top_nonnull ? nlohmann::ordered_json(*p.top_nonnull) : nullptr;
    nlohmann::ordered_json ranked = nlohmann::ordered_json::array();
    for (const auto &c : p.ranked)
      ranked.push_back({{"text", c.text},
                        {"probability", c.probability},
                        {"sentence", c.sentence_index},
                        {"char_start", c.char_start}});
    j["ranked"] = std::move(ranked);
    arr.push_back(std::move(j));
  }
  return {{"predictions", std::move(arr)}};
}

std::vector<RankedPrediction> predictions_from_json(const nlohmann::ordered_json &j) {
  std::vector<RankedPrediction> out;
  try {
    for (const auto &e : j.at("predictions")) {
      RankedPrediction p;
      p.article = e.at("article").get<std::string>();
      p.identifier = e.at("identifier").get<std::string>();
      p.occurrence = e.at("occurrence").get<int>();
      if (e.contains("top_prediction") && !e["top_prediction"].is_null())
        p.top_prediction = e["top_prediction"].get<std::string>();
      if (e.contains("top_nonnull") && !e["top_nonnull"].is_null())
        p.top_nonnull = e["top_nonnull"].get<std::string>();
      if (e.contains("ranked"))
        for (const auto &c : e["ranked"])
          p.ranked.push_back({c.at("text").get<std::string>(), c.at("probability").get<double>(),
                              c.value("sentence", 0), c.value("char_start", std::size_t{0})});
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("bad predictions file: ") + e.what());
  }
  return out;
}

std::vector<RankedPrediction> read_predictions(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return predictions_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_predictions(const std::string &path, const std::vector<RankedPrediction> &predictions) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << predictions_to_json(predictions).dump(1) << "\n";
}

const char *grouping_name(Grouping g) {
  switch (g) {
    case Grouping::kAll: return "all";
    case Grouping::kExplicit: return "explicit";
    case Grouping::kImplicit: return "implicit";
    default: return "any";
  }
}

const char *grouping_title(Grouping g) {
  switch (g) {
    case Grouping::kAll: return "All Identifiers";
    case Grouping::kExplicit: return "Explicit Descriptions";
    case Grouping::kImplicit: return "Implicit Descriptions";
    default: return "Any Descriptions";
  }
}

Grouping parse_grouping(std::string_view name) {
  for (Grouping g : all_groupings())
    if (name == grouping_name(g) || name == grouping_title(g)) return g;
  throw ConfigError("unknown grouping '" + std::string(name) + "'");
}

std::vector<Grouping> all_groupings() {
  return {Grouping::kAll, Grouping::kExplicit, Grouping::kImplicit, Grouping::kAny};
}

std::set<IdentifierKey> grouping_members(const Dataset &dataset, Grouping grouping) {
  std::set<IdentifierKey> out;
  for (const auto &a : dataset.articles) {
    for (const auto &id : a.identifiers) {
      bool described = false, explicit_ = false;
      for (const auto &ex : id.examples)
        for (const auto &ans : ex.answers) {
          described = true;
          explicit_ |= ans.explicit_answer;
        }
      bool in = grouping == Grouping::kAll || (grouping == Grouping::kAny && described) ||
                (grouping == Grouping::kExplicit && explicit_) ||
                (grouping == Grouping::kImplicit && described && !explicit_);
      if (in) out.insert({a.title, id.identifier});
    }
  }
  return out;
}

std::map<IdentifierKey, std::vector<std::string>> identifier_golds(const Dataset &dataset) {
  std::map<IdentifierKey, std::vector<std::string>> out;
  for (const auto &a : dataset.articles)
    for (const auto &id : a.identifiers) {
      auto &golds = out[{a.title, id.identifier}];
      for (const auto &ex : id.examples)
        for (const auto &ans : ex.answers)
          if (std::find(golds.begin(), golds.end(), ans.deduced_answer) == golds.end())
            golds.push_back(ans.deduced_answer);
    }
  return out;
}

const char *reduction_name(Reduction r) {
  switch (r) {
    case Reduction::kMax: return "max";
    case Reduction::kFirst: return "first";
    default: return "mean";
  }
}

Reduction parse_reduction(std::string_view name) {
  if (name == "max") return Reduction::kMax;
  if (name == "first") return Reduction::kFirst;
  if (name == "mean") return Reduction::kMean;
  throw ConfigError("unknown reduction '" + std::string(name) + "'");
}

EvalRow evaluate(const std::vector<RankedPrediction> &predictions, const Dataset &dataset,
                 Grouping grouping, Reduction reduction) {
  EvalRow row;
  row.grouping = grouping;
  auto members = grouping_members(dataset, grouping);
  auto golds = identifier_golds(dataset);
  std::map<IdentifierKey, std::vector<const RankedPrediction *>> by_id;
  for (const auto &p : predictions) by_id[{p.article, p.identifier}].push_back(&p);
  const bool nonnull = grouping != Grouping::kAll;
  double em_sum = 0, f1_sum = 0;
  for (const auto &key : members) {
    const auto &g = golds[key];
    const bool has_gold = !g.empty();
    auto preds = by_id[key];
    std::sort(preds.begin(), preds.end(),
              [](auto *a, auto *b) { return a->occurrence < b->occurrence; });
    std::vector<std::pair<double, double>> scores;
    for (const auto *p : preds) {
      const auto &pred = nonnull ? p->top_nonnull : p->top_prediction;
      scores.emplace_back(em_score(pred, g, has_gold), f1_score(pred, g, has_gold));
    }
    if (scores.empty()) scores.emplace_back(em_score(std::nullopt, g, has_gold),
                                            f1_score(std::nullopt, g, has_gold));
    double em = 0, f1 = 0;
    switch (reduction) {
      case Reduction::kMax:
        for (auto [e, f] : scores) em = std::max(em, e), f1 = std::max(f1, f);
        break;
      case Reduction::kFirst:
        em = scores.front().first, f1 = scores.front().second;
        break;
      case Reduction::kMean:
        for (auto [e, f] : scores) em += e, f1 += f;
        em /= static_cast<double>(scores.size());
        f1 /= static_cast<double>(scores.size());
        break;
    }
    em_sum += em;
    f1_sum += f1;
  }
  row.n_identifiers = members.size();
  if (!members.empty()) {
    row.em = em_sum / static_cast<double>(members.size());
    row.f1 = f1_sum / static_cast<double>(members.size());
  }
  return row;
}

std::string results_csv_header() {
  return "strategy,sampling_factor,pca,word_vectors,model,grouping,em,f1,n_identifiers";
}

std::string result_csv_line(const ResultRow &r) {
  std::ostringstream out;
  out << r.strategy << ',' << r.sampling_factor << ',' << (r.pca ? std::to_string(r.pca) : "none")
      << ',' << (r.word_vectors ? "yes" : "no") << ',' << r.model << ',' << r.grouping << ','
      << full(r.em) << ',' << full(r.f1) << ',' << r.n_identifiers;
  return out.str();
}

std::vector<ResultRow> read_results_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::vector<ResultRow> rows;
  std::string line;
  std::getline(in, line);
  if (trim(line) != results_csv_header()) throw ConfigError(path + ": unexpected header");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 9) throw ConfigError(path + ": bad row '" + line + "'");
    try {
      ResultRow r;
      r.strategy = f[0];
      r.sampling_factor = std::stoi(f[1]);
      r.pca = f[2] == "none" ? 0 : std::stoi(f[2]);
      r.word_vectors = f[3] == "yes";
      r.model = f[4];
      r.grouping = f[5];
      r.em = std::stod(f[6]);
      r.f1 = std::stod(f[7]);
      r.n_identifiers = std::stoul(f[8]);
      rows.push_back(std::move(r));
    } catch (const std::exception &) {
      throw ConfigError(path + ": bad row '" + line + "'");
    }
  }
  return rows;
}

std::string report_csv(const std::vector<ResultRow> &rows, std::size_t top_k) {
  std::ostringstream out;
  out << "Identifier Class,Approach,Model,SF,WV,CG,PCA,EM,F1\n";
  for (Grouping g : all_groupings()) {
    std::vector<const ResultRow *> sel;
    for (const auto &r : rows)
      if (r.grouping == grouping_name(g)) sel.push_back(&r);
    std::stable_sort(sel.begin(), sel.end(), [](auto *a, auto *b) {
      if (a->f1 != b->f1) return a->f1 > b->f1;
      return a->em > b->em;
    });
    if (top_k && sel.size() > top_k) sel.resize(top_k);
    for (const auto *r : sel) {
      bool sota = r->model == "SVM_SOTA" && r->strategy == "NNAN" && r->pca == 0 && !r->word_vectors;
      std::string model = r->model.rfind("SVM", 0) == 0 ? "SVM" : r->model;
      if (r->model == "SVM_def") model = "SVM_def";
      out << csv_field(grouping_title(g)) << ',' << (sota ? "SOTA" : "Variation") << ',' << model
          << ',' << r->sampling_factor << ',' << (r->word_vectors ? "Yes" : "No") << ','
          << r->strategy << ',' << (r->pca ? std::to_string(r->pca) : "No") << ',' << fmt(r->em)
          << ',' << fmt(r->f1) << "\n";
    }
  }
  return out.str();
}

std::string ablation_csv(const std::vector<ResultRow> &rows) {
  struct Acc {
    double em = 0, f1 = 0;
    std::size_t n = 0;
  };
  // grouping -> option -> level
  std::map<std::string, std::map<std::string, std::map<std::string, Acc>>> acc;
  for (const auto &r : rows) {
    auto &a = acc[r.grouping];
    std::pair<const char *, std::string> levels[] = {
        {"model", r.model},
        {"sampling_factor", std::to_string(r.sampling_factor)},
        {"word_vectors", r.word_vectors ? "yes" : "no"},
        {"strategy", r.strategy},
        {"pca", r.pca ? std::to_string(r.pca) : "none"},
    };
    for (const auto &[opt, level] : levels) {
      Acc &x = a[opt][level];
      x.em += r.em;
      x.f1 += r.f1;
      ++x.n;
    }
  }
  std::ostringstream out;
  out << "grouping,option,level,mean_em,mean_f1,n_configs\n";
  for (Grouping g : all_groupings()) {
    auto it = acc.find(grouping_name(g));
    if (it == acc.end()) continue;
    for (const auto &[opt, levels] : it->second)
      for (const auto &[level, x] : levels)
        out << grouping_name(g) << ',' << opt << ',' << level << ',' << fmt(x.em / x.n) << ','
            << fmt(x.f1 / x.n) << ',' << x.n << "\n";
  }
  return out.str();
}

}  // namespace midr
