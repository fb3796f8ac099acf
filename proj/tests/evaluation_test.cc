#include "midr/evaluation.h"

#include "doctest.h"
#include "json.hpp"
#include "midr/errors.h"
#include "test_util.h"

using namespace midr;
using nlohmann::json;

namespace {

std::optional<std::string> opt(const json &j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

Dataset mini_dataset() {
  Dataset ds = build_dataset(read_articles(std::string(MIDR_TEST_DATA) + "/mini/articles.jsonl"));
  attach_annotations(ds, read_annotations(std::string(MIDR_TEST_DATA) + "/mini/annotations.jsonl"));
  return ds;
}

// Predictions for every example of a dataset, from a function of the golds.
template <class F>
std::vector<RankedPrediction> predict_all(const Dataset &ds, F pick) {
  std::vector<RankedPrediction> out;
  for (const auto &a : ds.articles)
    for (const auto &id : a.identifiers)
      for (const auto &ex : id.examples) {
        RankedPrediction p;
        p.article = a.title;
        p.identifier = id.identifier;
        p.occurrence = ex.occurrence;
        p.top_prediction = p.top_nonnull = pick(ex);
        out.push_back(std::move(p));
      }
  return out;
}

}  // namespace

TEST_CASE("squad_normalize") {
  CHECK(squad_normalize("The Tax Rate.") == "tax rate");
  CHECK(squad_normalize("a parameter of the model") == "parameter of model");
  CHECK(squad_normalize("") == "");
  CHECK(squad_normalize("theme anthem") == "theme anthem");
  for (const char *s : {"The  Tax, Rate.", "Übertragungsrate (the)", "x–the y"})
    CHECK(squad_normalize(squad_normalize(s)) == squad_normalize(s));
}

TEST_CASE("scorer matches the reference fixture") {
  json cases = json::parse(read_test_file("scorer_cases.json"));
  REQUIRE(cases.size() == 20);
  for (const auto &c : cases) {
    auto pred = opt(c["prediction"]);
    auto golds = c["golds"].get<std::vector<std::string>>();
    bool has_gold = c["has_gold"].get<bool>();
    INFO(c.dump());
    int em = em_score(pred, golds, has_gold);
    double f1 = f1_score(pred, golds, has_gold);
    CHECK(em == c["em"].get<int>());
    CHECK(f1 == doctest::Approx(c["f1"].get<double>()).epsilon(1e-15));
    CHECK(em <= f1);
    if (pred) CHECK(squad_normalize(*pred) == c["normalized"].get<std::string>());
    if (pred && golds.size() == 1)
      CHECK(f1 == doctest::Approx(f1_score(golds[0], {*pred}, true)).epsilon(1e-15));
  }
  CHECK(em_score(std::nullopt, {}, false) == 1);
  CHECK(f1_score(std::nullopt, {}, false) == 1.0);
}

TEST_CASE("groupings partition described identifiers") {
  Dataset ds = mini_dataset();
  auto all = grouping_members(ds, Grouping::kAll);
  auto ex = grouping_members(ds, Grouping::kExplicit);
  auto im = grouping_members(ds, Grouping::kImplicit);
  auto any = grouping_members(ds, Grouping::kAny);
  CHECK(all.size() == ds.identifier_count());
  for (const auto &k : ex) CHECK(im.count(k) == 0);
  std::set<IdentifierKey> u = ex;
  u.insert(im.begin(), im.end());
  CHECK(u == any);
  for (const auto &k : any) CHECK(all.count(k) == 1);
  CHECK(!im.empty());
  CHECK(any.size() < all.size());
  DatasetStats st = compute_stats(ds);
  CHECK(any.size() == st.described_identifiers);
  CHECK(ex.size() == st.explicit_identifiers);
  CHECK(im.size() == st.implicit_only_identifiers);
}

TEST_CASE("evaluate") {
  Dataset ds = mini_dataset();
  auto perfect = predict_all(ds, [](const OccurrenceExample &ex) -> std::optional<std::string> {
    if (ex.answers.empty()) return std::nullopt;
    return ex.answers.front().deduced_answer;
  });
  for (Grouping g : all_groupings()) {
    EvalRow r = evaluate(perfect, ds, g);
    CHECK(r.em == 1.0);
    CHECK(r.f1 == 1.0);
    CHECK(r.n_identifiers == grouping_members(ds, g).size());
  }
  auto nothing = predict_all(ds, [](const OccurrenceExample &) { return std::nullopt; });
  EvalRow none_all = evaluate(nothing, ds, Grouping::kAll);
  double undescribed = static_cast<double>(ds.identifier_count() -
                                           grouping_members(ds, Grouping::kAny).size());
  CHECK(none_all.em == doctest::Approx(undescribed / ds.identifier_count()));
  CHECK(evaluate(nothing, ds, Grouping::kAny).f1 == 0.0);
  CHECK(evaluate({}, ds, Grouping::kAny).em == 0.0);

  // reductions: one right occurrence among wrong ones
  auto key = *grouping_members(ds, Grouping::kExplicit).begin();
  std::vector<RankedPrediction> preds;
  int first_right = -1;
  for (const auto &a : ds.articles)
    for (const auto &id : a.identifiers) {
      if (a.title != key.first || id.identifier != key.second) continue;
      for (const auto &ex : id.examples) {
        RankedPrediction p{a.title, id.identifier, ex.occurrence, {}, "wrong", "wrong"};
        if (first_right < 0 && !ex.answers.empty() && ex.occurrence > 1) {
          p.top_prediction = p.top_nonnull = ex.answers.front().deduced_answer;
          first_right = ex.occurrence;
        }
        preds.push_back(p);
      }
    }
  REQUIRE(first_right > 0);
  Dataset one;
  for (const auto &a : ds.articles)
    if (a.title == key.first) {
      ArticleEntry e{a.title, a.revision_tag, {}};
      for (const auto &id : a.identifiers)
        if (id.identifier == key.second) e.identifiers.push_back(id);
      one.articles.push_back(e);
    }
  CHECK(evaluate(preds, one, Grouping::kExplicit, Reduction::kMax).em == 1.0);
  CHECK(evaluate(preds, one, Grouping::kExplicit, Reduction::kFirst).em == 0.0);
  double mean = evaluate(preds, one, Grouping::kExplicit, Reduction::kMean).em;
  CHECK(mean == doctest::Approx(1.0 / preds.size()));
}

TEST_CASE("prediction JSON round trip") {
  std::vector<RankedPrediction> p{{"A", "x", 2, {{"tax rate", 0.75, 0, 9}}, "tax rate", "tax rate"},
                                  {"A", "y", 1, {{"rate", 0.25, 1, 3}}, std::nullopt, "rate"}};
  auto back = predictions_from_json(predictions_to_json(p));
  REQUIRE(back.size() == 2);
  CHECK(back[1].top_prediction == std::nullopt);
  CHECK(back[1].top_nonnull == "rate");
  CHECK(back[0].ranked[0].probability == 0.75);
  CHECK(back[0].ranked[0].char_start == 9);
  CHECK_THROWS_AS(predictions_from_json(json::parse(R"({"predictions":[{"article":1}]})")), ConfigError);
}

TEST_CASE("report and ablation tables") {
  std::vector<ResultRow> rows = {
      {"NNAN", 1, 0, false, "SVM_SOTA", "explicit", 0.491, 0.625, 175},
      {"NC", 2, 50, true, "GBM", "explicit", 0.4, 0.5, 175},
      {"NNAN", 2, 0, false, "GBM", "all", 0.477, 0.529, 310},
  };
  std::string rep = report_csv(rows);
  CHECK(rep ==
        "Identifier Class,Approach,Model,SF,WV,CG,PCA,EM,F1\n"
        "All Identifiers,Variation,GBM,2,No,NNAN,No,0.477,0.529\n"
        "Explicit Descriptions,SOTA,SVM,1,No,NNAN,No,0.491,0.625\n"
        "Explicit Descriptions,Variation,GBM,2,Yes,NC,50,0.400,0.500\n");
  CHECK(report_csv(rows, 1).find("0.400") == std::string::npos);
  std::string ab = ablation_csv(rows);
  CHECK(ab.find("explicit,model,GBM,0.400,0.500,1\n") != std::string::npos);
  CHECK(ab.find("explicit,pca,none,0.491,0.625,1\n") != std::string::npos);
  CHECK(ab.find("all,strategy,NNAN,0.477,0.529,1\n") != std::string::npos);
  CHECK(result_csv_line(rows[1]) == "NC,2,50,yes,GBM,explicit,0.40000000000000002,0.5,175");
}
