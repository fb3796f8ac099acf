#include "midr/dataset.h"

#include <random>

#include "doctest.h"
#include "midr/errors.h"
#include "midr/text.h"
#include "test_util.h"

using namespace midr;

namespace {

// The T_c passage placed so that T_c lands at article offset 6114.
std::string tc_article() {
  std::string passage = read_test_file("tc_passage.txt");
  std::string filler;
  while (filler.size() < 5601) filler += "Filler prose about capital structure and firms. ";
  filler.resize(5601);
  filler += "\n";
  return filler + passage;
}

Dataset mini_dataset() {
  Dataset ds = build_dataset(read_articles(std::string(MIDR_TEST_DATA) + "/mini/articles.jsonl"));
  attach_annotations(ds, read_annotations(std::string(MIDR_TEST_DATA) + "/mini/annotations.jsonl"));
  return ds;
}

OccurrenceExample tc_example() {
  OccurrenceExample ex;
  ex.occurrence = 1;
  ex.passage = read_test_file("tc_passage.txt");
  ex.matched_id_representation = "T_c";
  ex.id_passage_offset = 512;
  ex.id_article_offset = 6114;
  ex.digest = hex_digest(ex.passage);
  return ex;
}

Dataset single(OccurrenceExample ex) {
  Dataset ds;
  ds.articles.push_back({"Modigliani–Miller theorem", "", {{"T_c", {std::move(ex)}}}});
  return ds;
}

Annotation tax_rate(std::size_t start, std::size_t end) {
  Annotation a;
  a.article = "Modigliani–Miller theorem";
  a.identifier = "T_c";
  a.occurrence = 1;
  a.answer.explicit_answer = true;
  a.answer.raw_span = "the tax rate";
  a.answer.deduced_answer = "the tax rate";
  a.answer.start_pos = start;
  a.answer.end_pos = end;
  return a;
}

}  // namespace

TEST_CASE("find_occurrences on the T_c article") {
  std::string article = tc_article();
  auto occ = find_occurrences(article, make_identifier("T_c"));
  REQUIRE(occ.size() == 1);
  CHECK(occ[0].offset == 6114);
  CHECK(occ[0].between_math_tags);
  CHECK(occ[0].representation == "T_c");

  ArticleContext ctx(article);
  OccurrenceExample ex = build_example(ctx, occ[0], {});
  CHECK(ex.id_mini_context == "'\n* <math>T_c</math> ''");
  CHECK(ex.id_article_offset == 6114);
  CHECK(ex.occurrence == 1);
  CHECK_FALSE(ex.same_as_previous);
  CHECK(cp_substr(ex.passage, ex.id_passage_offset, ex.id_passage_offset + 3) == "T_c");
  CHECK(ex.passage.find("''is the tax rate.''") != std::string::npos);
  CHECK(ex.digest == hex_digest(ex.passage, "md5"));
  CHECK(ex.digest.size() == 32);
}

TEST_CASE("find_occurrences edge cases") {
  CHECK(find_occurrences("x appears", make_identifier("y")).empty());
  auto two = find_occurrences("<math>\\alpha + 1</math> and &alpha; again", make_identifier("α"));
  REQUIRE(two.size() == 2);
  CHECK(two[0].representation == "\\alpha");
  CHECK(two[0].between_math_tags);
  CHECK(two[1].representation == "&alpha;");
  CHECK_FALSE(two[1].between_math_tags);
  CHECK(two[0].representation != two[1].representation);
  // Offsets are code points, not bytes.
  auto cp = find_occurrences("ééé <math>x</math>", make_identifier("x"));
  REQUIRE(cp.size() == 1);
  CHECK(cp[0].offset == 10);
  CHECK(cp[0].byte_offset == 13);
}

TEST_CASE("extract_passage extends to paragraph boundaries") {
  std::string a(2000, 'w');
  for (std::size_t i = 0; i < a.size(); i += 7) a[i] = ' ';
  a[249] = a[250] = '\n';
  a[899] = a[900] = '\n';
  PassageWindow w = extract_passage(a, 500, 1);
  CHECK(w.begin == 250);
  CHECK(w.end == 900);
  CHECK_FALSE(w.sanitised);

  std::string short_article(300, 'a');
  PassageWindow s = extract_passage(short_article, 10, 1);
  CHECK(s.begin == 0);
  CHECK(s.end == 300);
}

TEST_CASE("extract_passage pushes an edge past a math element") {
  std::string a(290, 'a');
  a += "<math>x + y + z + w + v + u + tt + ss + rrr</math>";  // [290, 340)
  REQUIRE(a.size() == 340);
  a += "\n\n" + std::string(400, 'b');
  PassageWindow w = extract_passage(a, 100, 1);
  CHECK(w.sanitised);
  CHECK(w.end >= 340);
  CHECK(w.end == 341);

  std::string plain(340, 'a');
  plain += "\n\n" + std::string(400, 'b');
  PassageWindow p = extract_passage(plain, 100, 1);
  CHECK_FALSE(p.sanitised);
  CHECK(p.end == 341);
}

TEST_CASE("heading lines are paragraph boundaries") {
  std::string a = "intro text\n==Section==\nbody";
  auto b = paragraph_boundaries(a);
  CHECK(b == std::vector<std::size_t>{0, 10, a.size()});
}

TEST_CASE("passages contain the clipped 200-character window") {
  std::mt19937 rng(5);
  const char *pieces[] = {"word ", "x ", "\n\n", "<math>a=b</math> ", "''it'' ", "[[link]] ",
                          "{{tpl|a}} ", "\n==H==\n"};
  for (int trial = 0; trial < 100; ++trial) {
    std::string a;
    int n = 20 + static_cast<int>(rng() % 300);
    for (int k = 0; k < n; ++k) a += pieces[rng() % 8];
    std::size_t len = codepoint_count(a);
    std::size_t off = rng() % len;
    PassageWindow w = extract_passage(a, off, 1);
    CHECK(w.begin <= (off > 200 ? off - 200 : 0));
    CHECK(w.end >= std::min(len, off + 201));
    if (off >= 200 && off + 201 <= len) CHECK(w.end - w.begin >= 401);
  }
}

TEST_CASE("consecutive occurrences in one short paragraph share a passage") {
  std::string a = "Short paragraph with <math>x</math> twice: <math>x</math>.";
  ArticleContext ctx(a);
  auto occ = find_occurrences(a, make_identifier("x"));
  REQUIRE(occ.size() == 2);
  std::vector<OccurrenceExample> exs;
  for (const auto &m : occ) exs.push_back(build_example(ctx, m, exs));
  CHECK_FALSE(exs[0].same_as_previous);
  CHECK(exs[1].same_as_previous);
  CHECK(exs[1].occurrence == 2);
}

TEST_CASE("attach_annotations verifies spans") {
  Dataset ds = single(tc_example());
  attach_annotations(ds, {tax_rate(528, 540)});
  const auto &ex = ds.articles[0].identifiers[0].examples[0];
  REQUIRE(ex.answers.size() == 1);
  CHECK(cp_substr(ex.passage, 528, 540) == "the tax rate");
  CHECK(ex.answers[0].surface_span == "the tax rate");

  Dataset bad = single(tc_example());
  CHECK_THROWS_AS(attach_annotations(bad, {tax_rate(527, 539)}), AnnotationAlignmentError);
  CHECK_THROWS_AS(attach_annotations(bad, {tax_rate(1050, 1062)}), AnnotationAlignmentError);
  Annotation missing = tax_rate(528, 540);
  missing.occurrence = 2;
  CHECK_THROWS_AS(attach_annotations(bad, {missing}), AnnotationAlignmentError);
}

TEST_CASE("attach_annotations derives surface spans and drops numeric values") {
  Dataset ds = single(tc_example());
  std::string p = ds.articles[0].identifiers[0].examples[0].passage;
  std::size_t b = codepoint_count(p.substr(0, p.find("[[cost of debt]]")));
  Annotation wl = tax_rate(b, b + 16);
  wl.answer.raw_span = "[[cost of debt]]";
  wl.answer.deduced_answer = "cost of debt";
  wl.answer.wikilink = true;
  Annotation num = tax_rate(1049, 1052);
  num.answer.raw_span = "100";
  num.answer.deduced_answer = "100";
  attach_annotations(ds, {wl, num});
  const auto &answers = ds.articles[0].identifiers[0].examples[0].answers;
  REQUIRE(answers.size() == 1);
  CHECK(answers[0].surface_span == "cost of debt");

  Dataset keep = single(tc_example());
  AttachOptions ko;
  ko.keep_numeric = true;
  attach_annotations(keep, {num}, ko);
  CHECK(keep.articles[0].identifiers[0].examples[0].answers.size() == 1);
}

TEST_CASE("plural grounding attaches as implicit") {
  Dataset ds = mini_dataset();
  bool found = false;
  for (const auto &a : ds.articles)
    for (const auto &id : a.identifiers)
      for (const auto &ex : id.examples)
        for (const auto &ans : ex.answers)
          if (ans.raw_span == "parameters of the model" && id.identifier == "I") {
            CHECK_FALSE(ans.explicit_answer);
            CHECK(ans.deduced_answer == "a parameter of the model");
            found = true;
          }
  CHECK(found);
}

TEST_CASE("validate_dataset") {
  Dataset ds = mini_dataset();
  CHECK(validate_dataset(ds).empty());

  Dataset broken = ds;
  auto &ex = broken.articles[0].identifiers[0].examples[0];
  REQUIRE(!ex.answers.empty());
  ex.answers[0].end_pos = codepoint_count(ex.passage) + 5;
  CHECK(validate_dataset(broken).size() == 1);

  Dataset edited = ds;
  OccurrenceExample *target = nullptr;
  for (auto &id : edited.articles[2].identifiers)
    if (id.identifier == "N") target = &id.examples[0];
  REQUIRE(target);
  REQUIRE(target->answers.empty());
  target->passage.back() = target->passage.back() == '.' ? ',' : '.';
  auto v = validate_dataset(edited);
  REQUIRE(v.size() == 1);
  CHECK(v[0].message == "digest mismatch");
}

TEST_CASE("covering span") {
  OccurrenceExample ex;
  ex.passage = std::string(200, 'a');
  ex.matched_id_representation = "x";
  ex.id_passage_offset = 100;
  AnswerRecord ans;
  ans.start_pos = 110;
  ans.end_pos = 120;
  ex.answers = {ans};
  CHECK(covering_span(ex) == 20u);
  ans.start_pos = 60;
  ans.end_pos = 70;
  ex.answers.push_back(ans);
  CHECK(covering_span(ex) == 20u);
  ex.answers = {};
  CHECK_FALSE(covering_span(ex).has_value());

  OccurrenceExample tab;
  tab.passage = "<math>p</math>\n{|\n| Pressure || ''p''\n|}\n";
  tab.matched_id_representation = "p";
  tab.id_passage_offset = 6;
  AnswerRecord in_table;
  in_table.start_pos = 20;
  in_table.end_pos = 28;
  tab.answers = {in_table};
  CHECK_FALSE(covering_span(tab).has_value());
}

TEST_CASE("quantile uses linear interpolation") {
  CHECK(quantile({1, 2, 3, 4}, 0.975) == doctest::Approx(3.925));
  CHECK(quantile({5}, 0.3) == 5);
  CHECK(quantile({3, 1, 2}, 0.5) == 2);
  SummaryStats s = summarize({1, 2, 3, 10});
  CHECK(s.mean == doctest::Approx(4));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.min == 1);
  CHECK(s.max == 10);
}

TEST_CASE("compute_stats on the mini-corpus") {
  Dataset ds = mini_dataset();
  DatasetStats st = compute_stats(ds);
  CHECK(st.n_articles == 5);
  CHECK(st.n_identifiers == 12);
  CHECK(st.n_examples == ds.example_count());
  std::size_t freq = 0, weighted = 0;
  for (auto [k, v] : st.occurrence_histogram) {
    freq += v;
    weighted += k * v;
  }
  CHECK(freq == st.n_identifiers);
  CHECK(weighted == st.n_examples);
  CHECK(st.described_identifiers == 10);
  CHECK(st.explicit_identifiers == 7);
  CHECK(st.implicit_only_identifiers == 3);
  CHECK(st.undescribed_identifiers == 2);
  CHECK(st.described_identifiers + st.undescribed_identifiers == st.n_identifiers);
  CHECK(st.context_lengths.size() == st.n_examples);
  CHECK(st.context_length_stats.min >= 1);
}

TEST_CASE("dataset JSON is deterministic and round-trips") {
  Dataset a = mini_dataset();
  Dataset b = mini_dataset();
  std::string ja = dataset_to_json(a);
  CHECK(ja == dataset_to_json(b));
  CHECK(dataset_to_json(dataset_from_json(ja)) == ja);
}

TEST_CASE("example JSON follows the published schema") {
  Dataset ds = mini_dataset();
  const auto &ex = ds.articles[0].identifiers[0].examples[0];
  REQUIRE(!ex.answers.empty());
  CHECK(schema_signature(example_to_json(ex)) == read_test_file("example_schema.txt"));
}

TEST_CASE("published implicit identifier list") {
  auto list = read_identifier_list(std::string(MIDR_SOURCE_DIR) + "/data/implicit_identifiers.tsv");
  CHECK(list.size() == 49);
  CHECK(list.front() == std::pair<std::string, std::string>{"331 model", "I"});
  for (const auto &[title, id] : list) CHECK_NOTHROW(normalize_identifier(id));
}

TEST_CASE("input errors") {
  CHECK_THROWS_AS(read_articles("/nonexistent.jsonl"), ConfigError);
  ArticleInput a{{"T", "text", ""}, {"x"}};
  CHECK_THROWS_AS(build_dataset({a, a}), ConfigError);
  CHECK_THROWS_AS(build_dataset({ArticleInput{{"T", "text", ""}, {"x+y"}}}), NotAnIdentifier);
}
