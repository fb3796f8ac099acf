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

#include "midr/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "midr/errors.h"
#include "midr/text.h"

namespace midr {

using ojson = nlohmann::ordered_json;

std::size_t Dataset::example_count() const {
  std::size_t n = 0;
  for (const auto &a : articles)
    for (const auto &id : a.identifiers) n += id.examples.size();
  return n;
}

std::size_t Dataset::identifier_count() const {
  std::size_t n = 0;
  for (const auto &a : articles) n += a.identifiers.size();
  return n;
}

std::vector<Occurrence> find_occurrences(std::string_view stripped_article,
                                         const CanonicalIdentifier &target,
                                         const MathLexicon &lexicon) {
  IdentifierMatcher matcher(target, lexicon);
  CodepointIndex index(stripped_article);
  std::vector<Occurrence> out;
  for (const auto &m : matcher.find_all(stripped_article)) {
    Occurrence o;
    o.byte_offset = m.begin;
    o.offset = index.cp_at(m.begin);
    o.length = index.cp_at(m.end) - o.offset;
    o.representation = std::string(stripped_article.substr(m.begin, m.end - m.begin));
    o.between_math_tags = m.between_math_tags;
    out.push_back(std::move(o));
  }
  return out;
}

namespace {

bool is_heading_line(std::string_view s, std::size_t q) {
  if (q >= s.size() || s[q] != '=') return false;
  std::size_t e = s.find('\n', q);
  std::string_view line = trim(s.substr(q, e == std::string_view::npos ? s.npos : e - q));
  return line.size() >= 3 && line.back() == '=';
}

std::vector<std::size_t> boundary_bytes(std::string_view s) {
  std::vector<std::size_t> b{0};
  for (std::size_t p = 0; p + 1 < s.size(); ++p) {
    if (s[p] != '\n') continue;
    if (s[p + 1] == '\n') b.push_back(p + 1);
    if (is_heading_line(s, p + 1)) b.push_back(p);
  }
  b.push_back(s.size());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

}  // namespace

std::vector<std::size_t> paragraph_boundaries(std::string_view article) {
  CodepointIndex index(article);
  std::vector<std::size_t> out;
  for (std::size_t b : boundary_bytes(article)) out.push_back(index.cp_at(b));
  return out;
}

ArticleContext::ArticleContext(std::string stripped) : text_(std::move(stripped)) {
  CodepointIndex index(text_);
  cp_starts_.reserve(index.size() + 1);
  for (std::size_t i = 0; i <= index.size(); ++i) cp_starts_.push_back(index.byte_at(i));
  for (std::size_t b : boundary_bytes(text_)) boundaries_.push_back(index.cp_at(b));
  for (auto [b, e] : markup_elements(text_)) elements_.emplace_back(index.cp_at(b), index.cp_at(e));
}

std::size_t ArticleContext::size() const { return cp_starts_.size() - 1; }

std::string ArticleContext::substr(std::size_t begin, std::size_t end) const {
  begin = std::min(begin, size());
  end = std::clamp(end, begin, size());
  return text_.substr(cp_starts_[begin], cp_starts_[end] - cp_starts_[begin]);
}

PassageWindow ArticleContext::window(std::size_t offset, std::size_t id_len,
                                     std::size_t half_width) const {
  const std::size_t n = size();
  std::size_t lo = offset > half_width ? offset - half_width : 0;
  std::size_t hi = std::min(n, offset + id_len + half_width);
  bool sanitised = false;
  for (;;) {
    for (bool moved = true; moved;) {
      moved = false;
      for (auto [b, e] : elements_) {
        if (b < lo && lo < e) lo = b, moved = true;
        if (b < hi && hi < e) hi = e, moved = true;
      }
      sanitised |= moved;
    }
    auto up = std::upper_bound(boundaries_.begin(), boundaries_.end(), lo);
    std::size_t nlo = *std::prev(up);
    std::size_t nhi = *std::lower_bound(boundaries_.begin(), boundaries_.end(), hi);
    if (nlo == lo && nhi == hi) break;
    lo = nlo;
    hi = nhi;
  }
  return {lo, hi, sanitised};
}

PassageWindow extract_passage(std::string_view article, std::size_t offset, std::size_t id_len,
                              std::size_t half_width) {
  return ArticleContext(std::string(article)).window(offset, id_len, half_width);
}

OccurrenceExample build_example(const ArticleContext &article, const Occurrence &match,
                                const std::vector<OccurrenceExample> &prior,
                                const BuildOptions &options) {
  OccurrenceExample ex;
  ex.occurrence = static_cast<int>(prior.size()) + 1;
  PassageWindow w = article.window(match.offset, match.length, options.half_width);
  ex.sanitised = w.sanitised;
  std::size_t mc = options.mini_context;
  ex.id_mini_context = article.substr(match.offset > mc ? match.offset - mc : 0,
                                      match.offset + match.length + mc);
  ex.matched_id_representation = match.representation;
  ex.id_article_offset = match.offset;
  ex.id_passage_offset = match.offset - w.begin;
  ex.between_math_tags = match.between_math_tags;
  ex.passage = article.substr(w.begin, w.end);
  ex.digest = hex_digest(ex.passage, options.digest_algorithm);
  ex.same_as_previous = !prior.empty() && prior.back().digest == ex.digest;
  return ex;
}

Dataset build_dataset(const std::vector<ArticleInput> &inputs, const BuildOptions &options) {
  Dataset ds;
  ds.digest_algorithm = options.digest_algorithm;
  std::set<std::string> titles;
  for (const auto &in : inputs) {
    if (!titles.insert(in.article.title).second)
      throw ConfigError("duplicate article title: " + in.article.title);
    if (in.article.wikitext.empty())
      throw ConfigError("article has no wikitext: " + in.article.title);
    ArticleEntry entry{in.article.title, in.article.revision_tag, {}};
    ArticleContext ctx(strip_inline_refs(in.article.wikitext).text);
    std::set<std::string> seen;
    for (const auto &raw : in.identifiers) {
      CanonicalIdentifier id = make_identifier(raw, *options.lexicon);
      if (!seen.insert(id.canonical).second) continue;
      IdentifierEntry ie{id.canonical, {}};
      for (const auto &m : find_occurrences(ctx.text(), id, *options.lexicon))
        ie.examples.push_back(build_example(ctx, m, ie.examples, options));
      entry.identifiers.push_back(std::move(ie));
    }
    ds.articles.push_back(std::move(entry));
  }
  return ds;
}

namespace {

std::string describe(const Annotation &a) {
  return "annotation (" + a.article + ", " + a.identifier + ", " + std::to_string(a.occurrence) +
         ", \"" + a.answer.raw_span + "\", " + std::to_string(a.answer.start_pos) + ", " +
         std::to_string(a.answer.end_pos) + ")";
}

}  // namespace

void attach_annotations(Dataset &dataset, const std::vector<Annotation> &annotations,
                        const AttachOptions &options) {
  std::map<std::tuple<std::string, std::string, int>, OccurrenceExample *> index;
  for (auto &a : dataset.articles)
    for (auto &id : a.identifiers)
      for (auto &ex : id.examples) index[{a.title, id.identifier, ex.occurrence}] = &ex;

  for (const auto &ann : annotations) {
    std::string canonical;
    try {
      canonical = normalize_identifier(ann.identifier, *options.lexicon);
    } catch (const NotAnIdentifier &e) {
      throw AnnotationAlignmentError(describe(ann) + ": " + e.what());
    }
    auto it = index.find({ann.article, canonical, ann.occurrence});
    if (it == index.end()) throw AnnotationAlignmentError(describe(ann) + ": no such example");
    OccurrenceExample &ex = *it->second;
    const AnswerRecord &in = ann.answer;
    std::size_t len = codepoint_count(ex.passage);
    if (in.start_pos >= in.end_pos || in.end_pos > len)
      throw AnnotationAlignmentError(describe(ann) + ": span outside passage of length " +
                                     std::to_string(len));
    std::string found = cp_substr(ex.passage, in.start_pos, in.end_pos);
    if (found != in.raw_span)
      throw AnnotationAlignmentError(describe(ann) + ": passage has \"" + found + "\"");
    if (trim(in.deduced_answer).empty())
      throw AnnotationAlignmentError(describe(ann) + ": empty deduced_answer");
    if (!options.keep_numeric && is_numeric_text(trim(in.deduced_answer))) continue;
    AnswerRecord rec = in;
    if (!ann.has_surface_span) {
      std::vector<CanonicalIdentifier> targets{make_identifier(canonical, *options.lexicon)};
      RenderOptions ro;
      ro.lexicon = options.lexicon;
      try {
        rec.surface_span = collapse_whitespace(render_surface(in.raw_span, targets, ro).text);
      } catch (const MalformedMarkup &) {
        rec.surface_span = in.raw_span;
      }
    }
    ex.answers.push_back(std::move(rec));
  }
}

std::vector<Violation> validate_dataset(const Dataset &dataset) {
  std::vector<Violation> out;
  for (const auto &a : dataset.articles) {
    for (const auto &id : a.identifiers) {
      std::string prev_digest;
      for (std::size_t i = 0; i < id.examples.size(); ++i) {
        const auto &ex = id.examples[i];
        auto bad = [&](std::string msg) {
          out.push_back({a.title, id.identifier, ex.occurrence, std::move(msg)});
        };
        if (ex.occurrence != static_cast<int>(i) + 1)
          bad("occurrence " + std::to_string(ex.occurrence) + " at position " +
              std::to_string(i + 1));
        std::size_t len = codepoint_count(ex.passage);
        std::size_t rep_len = codepoint_count(ex.matched_id_representation);
        if (ex.id_passage_offset + rep_len > len ||
            cp_substr(ex.passage, ex.id_passage_offset, ex.id_passage_offset + rep_len) !=
                ex.matched_id_representation)
          bad("matched_id_representation not found at id_passage_offset");
        if (ex.id_article_offset < ex.id_passage_offset)
          bad("id_article_offset precedes id_passage_offset");
        for (std::size_t k = 0; k < ex.answers.size(); ++k) {
          const auto &ans = ex.answers[k];
          std::string where = "answer " + std::to_string(k) + ": ";
          if (ans.start_pos >= ans.end_pos || ans.end_pos > len)
            bad(where + "span [" + std::to_string(ans.start_pos) + ", " +
                std::to_string(ans.end_pos) + ") outside passage of length " + std::to_string(len));
          else if (cp_substr(ex.passage, ans.start_pos, ans.end_pos) != ans.raw_span)
            bad(where + "raw_span does not match passage");
          if (trim(ans.deduced_answer).empty()) bad(where + "empty deduced_answer");
        }
        std::string digest = hex_digest(ex.passage, dataset.digest_algorithm);
        if (ex.digest != digest) bad("digest mismatch");
        bool same = i > 0 && ex.digest == prev_digest;
        if (ex.same_as_previous != same) bad("same_as_previous inconsistent with digests");
        prev_digest = ex.digest;
      }
    }
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  double pos = q * static_cast<double>(values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SummaryStats summarize(const std::vector<double> &values, const std::vector<double> &qs) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.median = quantile(values, 0.5);
  for (double q : qs) {
    std::ostringstream key;
    key << q;
    s.quantiles[key.str()] = quantile(values, q);
  }
  return s;
}

std::vector<std::pair<std::size_t, std::size_t>> table_ranges(std::string_view passage) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::vector<std::size_t> open;
  CodepointIndex index(passage);
  std::size_t line = 0;
  while (line < passage.size()) {
    std::size_t e = passage.find('\n', line);
    if (e == std::string_view::npos) e = passage.size();
    std::string_view l = trim(passage.substr(line, e - line));
    if (l.rfind("{|", 0) == 0) {
      open.push_back(line);
    } else if (l.rfind("|}", 0) == 0 && !open.empty()) {
      std::size_t b = open.back();
      open.pop_back();
      if (open.empty()) out.emplace_back(index.cp_at(b), index.cp_at(std::min(e, passage.size())));
    }
    line = e + 1;
  }
  // A table cut by the passage edge still counts from its start.
  if (!open.empty()) out.emplace_back(index.cp_at(open.front()), index.size());
  return out;
}

std::optional<std::size_t> covering_span(const OccurrenceExample &ex) {
  auto tables = table_ranges(ex.passage);
  std::size_t id_b = ex.id_passage_offset;
  std::size_t id_e = id_b + codepoint_count(ex.matched_id_representation);
  std::optional<std::size_t> best;
  for (const auto &ans : ex.answers) {
    bool in_table = std::any_of(tables.begin(), tables.end(), [&](auto r) {
      return ans.start_pos >= r.first && ans.start_pos < r.second;
    });
    if (in_table) continue;
    std::size_t span = std::max(id_e, ans.end_pos) - std::min(id_b, ans.start_pos);
    if (!best || span < *best) best = span;
  }
  return best;
}

DatasetStats compute_stats(const Dataset &dataset) {
  DatasetStats st;
  st.n_articles = dataset.articles.size();
  std::vector<double> occ;
  for (const auto &a : dataset.articles) {
    for (const auto &id : a.identifiers) {
      ++st.n_identifiers;
      st.n_examples += id.examples.size();
      ++st.occurrence_histogram[id.examples.size()];
      occ.push_back(static_cast<double>(id.examples.size()));
      bool described = false, has_explicit = false;
      for (const auto &ex : id.examples) {
        st.context_lengths.push_back(static_cast<double>(codepoint_count(ex.passage)));
        if (auto c = covering_span(ex)) st.covering_spans.push_back(static_cast<double>(*c));
        for (const auto &ans : ex.answers) {
          described = true;
          has_explicit |= ans.explicit_answer;
        }
      }
      if (!described) {
        ++st.undescribed_identifiers;
      } else {
        ++st.described_identifiers;
        if (has_explicit) {
          ++st.explicit_identifiers;
        } else {
          ++st.implicit_only_identifiers;
          st.implicit_identifiers.emplace_back(a.title, id.identifier);
        }
      }
    }
  }
  const std::vector<double> qs{0.25, 0.75, 0.975};
  st.occurrence_stats = summarize(occ, qs);
  st.covering_span_stats = summarize(st.covering_spans, qs);
  st.context_length_stats = summarize(st.context_lengths, qs);
  return st;
}

// ---------------------------------------------------------------------------
// I/O

namespace {

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
void for_each_json_line(const std::string &path, F &&f) {
  std::string data = slurp(path);
  std::istringstream in(data);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

ojson answer_json(const AnswerRecord &a) {
  ojson j;
  j["wikilink"] = a.wikilink;
  j["explicit_answer"] = a.explicit_answer;
  j["raw_span"] = a.raw_span;
  j["surface_span"] = a.surface_span;
  j["deduced_answer"] = a.deduced_answer;
  j["references_this_id_occurrence"] = a.references_this_id_occurrence;
  j["start_pos"] = a.start_pos;
  j["end_pos"] = a.end_pos;
  return j;
}

ojson example_json(const OccurrenceExample &ex) {
  ojson j;
  j["occurrence"] = ex.occurrence;
  j["sanitised"] = ex.sanitised;
  j["id_mini_context"] = ex.id_mini_context;
  j["matched_id_representation"] = ex.matched_id_representation;
  j["id_article_offset"] = ex.id_article_offset;
  j["id_passage_offset"] = ex.id_passage_offset;
  j["between_math_tags"] = ex.between_math_tags;
  j["same_as_previous"] = ex.same_as_previous;
  j["passage"] = ex.passage;
  j["answers"] = ojson::array();
  for (const auto &a : ex.answers) j["answers"].push_back(answer_json(a));
  j["digest"] = ex.digest;
  return j;
}

AnswerRecord answer_from(const ojson &j) {
  AnswerRecord a;
  a.wikilink = j.at("wikilink").get<bool>();
  a.explicit_answer = j.at("explicit_answer").get<bool>();
  a.raw_span = j.at("raw_span").get<std::string>();
  a.surface_span = j.at("surface_span").get<std::string>();
  a.deduced_answer = j.at("deduced_answer").get<std::string>();
  a.references_this_id_occurrence = j.at("references_this_id_occurrence").get<bool>();
  a.start_pos = j.at("start_pos").get<std::size_t>();
  a.end_pos = j.at("end_pos").get<std::size_t>();
  return a;
}

OccurrenceExample example_from(const ojson &j) {
  OccurrenceExample ex;
  ex.occurrence = j.at("occurrence").get<int>();
  ex.sanitised = j.at("sanitised").get<bool>();
  ex.id_mini_context = j.at("id_mini_context").get<std::string>();
  ex.matched_id_representation = j.at("matched_id_representation").get<std::string>();
  ex.id_article_offset = j.at("id_article_offset").get<std::size_t>();
  ex.id_passage_offset = j.at("id_passage_offset").get<std::size_t>();
  ex.between_math_tags = j.at("between_math_tags").get<bool>();
  ex.same_as_previous = j.at("same_as_previous").get<bool>();
  ex.passage = j.at("passage").get<std::string>();
  for (const auto &a : j.at("answers")) ex.answers.push_back(answer_from(a));
  ex.digest = j.at("digest").get<std::string>();
  return ex;
}

ojson summary_json(const SummaryStats &s) {
  ojson j;
  j["count"] = s.count;
  j["min"] = s.min;
  j["max"] = s.max;
  j["mean"] = s.mean;
  j["median"] = s.median;
  for (const auto &[q, v] : s.quantiles) j["quantile_" + q] = v;
  return j;
}

void write_file(const std::string &path, const std::string &data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << data;
}

void write_histogram(const std::string &path, const std::vector<double> &values, double width) {
  std::map<long long, std::size_t> bins;
  for (double v : values) ++bins[static_cast<long long>(std::floor(v / width) * width)];
  std::string csv = "bin,count\n";
  for (auto [b, c] : bins) csv += std::to_string(b) + "," + std::to_string(c) + "\n";
  write_file(path, csv);
}

void signature(const ojson &j, const std::string &path, std::string &out) {
  auto type = [](const ojson &v) -> std::string {
    if (v.is_boolean()) return "boolean";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    if (v.is_object()) return "object";
    return "null";
  };
  for (const auto &[k, v] : j.items()) {
    std::string p = path.empty() ? k : path + "." + k;
    out += p + ":" + type(v) + "\n";
    if (v.is_object()) signature(v, p, out);
    if (v.is_array() && !v.empty() && v.front().is_object()) signature(v.front(), p + "[]", out);
  }
}

}  // namespace

std::vector<ArticleInput> read_articles(const std::string &path) {
  std::vector<ArticleInput> out;
  for_each_json_line(path, [&](const nlohmann::json &j) {
    ArticleInput in;
    in.article.title = j.at("title").get<std::string>();
    in.article.wikitext = j.at("wikitext").get<std::string>();
    in.article.revision_tag = j.value("revision_tag", "");
    in.identifiers = j.at("identifiers").get<std::vector<std::string>>();
    out.push_back(std::move(in));
  });
  return out;
}

std::vector<Annotation> read_annotations(const std::string &path) {
  std::vector<Annotation> out;
  for_each_json_line(path, [&](const nlohmann::json &j) {
    Annotation a;
    a.article = j.at("article").get<std::string>();
    a.identifier = j.at("identifier").get<std::string>();
    a.occurrence = j.at("occurrence").get<int>();
    a.answer.wikilink = j.at("wikilink").get<bool>();
    a.answer.explicit_answer = j.at("explicit").get<bool>();
    a.answer.raw_span = j.at("raw_span").get<std::string>();
    a.answer.deduced_answer = j.at("deduced_answer").get<std::string>();
    a.answer.start_pos = j.at("start_pos").get<std::size_t>();
    a.answer.end_pos = j.at("end_pos").get<std::size_t>();
    a.answer.references_this_id_occurrence = j.value("references_this_id_occurrence", true);
    if (j.contains("surface_span")) {
      a.answer.surface_span = j.at("surface_span").get<std::string>();
      a.has_surface_span = true;
    }
    out.push_back(std::move(a));
  });
  return out;
}

std::string example_to_json(const OccurrenceExample &example, int indent) {
  return example_json(example).dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string dataset_to_json(const Dataset &dataset) {
  ojson root;
  root["format"] = "mfquad";
  root["digest_algorithm"] = dataset.digest_algorithm;
  root["articles"] = ojson::array();
  for (const auto &a : dataset.articles) {
    ojson ja;
    ja["title"] = a.title;
    ja["revision_tag"] = a.revision_tag;
    ja["identifiers"] = ojson::array();
    for (const auto &id : a.identifiers) {
      ojson ji;
      ji["identifier"] = id.identifier;
      ji["examples"] = ojson::array();
      for (const auto &ex : id.examples) ji["examples"].push_back(example_json(ex));
      ja["identifiers"].push_back(std::move(ji));
    }
    root["articles"].push_back(std::move(ja));
  }
  return root.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

Dataset dataset_from_json(std::string_view json) {
  try {
    ojson root = ojson::parse(json);
    Dataset ds;
    ds.digest_algorithm = root.value("digest_algorithm", "md5");
    for (const auto &ja : root.at("articles")) {
      ArticleEntry a;
      a.title = ja.at("title").get<std::string>();
      a.revision_tag = ja.value("revision_tag", "");
      for (const auto &ji : ja.at("identifiers")) {
        IdentifierEntry id;
        id.identifier = ji.at("identifier").get<std::string>();
        for (const auto &je : ji.at("examples")) id.examples.push_back(example_from(je));
        a.identifiers.push_back(std::move(id));
      }
      ds.articles.push_back(std::move(a));
    }
    return ds;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed dataset: ") + e.what());
  }
}

Dataset read_dataset(const std::string &path) { return dataset_from_json(slurp(path)); }

void write_dataset(const Dataset &dataset, const std::string &path) {
  write_file(path, dataset_to_json(dataset));
}

std::string stats_to_json(const DatasetStats &st) {
  ojson j;
  j["n_articles"] = st.n_articles;
  j["n_identifiers"] = st.n_identifiers;
  j["n_examples"] = st.n_examples;
  j["occurrences"] = summary_json(st.occurrence_stats);
  j["covering_span"] = summary_json(st.covering_span_stats);
  j["context_length"] = summary_json(st.context_length_stats);
  j["described_identifiers"] = st.described_identifiers;
  j["explicit_identifiers"] = st.explicit_identifiers;
  j["implicit_only_identifiers"] = st.implicit_only_identifiers;
  j["undescribed_identifiers"] = st.undescribed_identifiers;
  ojson hist = ojson::object();
  for (auto [k, v] : st.occurrence_histogram) hist[std::to_string(k)] = v;
  j["occurrence_histogram"] = hist;
  ojson imp = ojson::array();
  for (const auto &[t, id] : st.implicit_identifiers) imp.push_back({t, id});
  j["implicit_identifiers"] = imp;
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

void write_stats(const DatasetStats &st, const std::string &dir) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/stats.json", stats_to_json(st));
  std::string occ = "bin,count\n";
  for (auto [k, v] : st.occurrence_histogram)
    occ += std::to_string(k) + "," + std::to_string(v) + "\n";
  write_file(dir + "/occurrence_histogram.csv", occ);
  write_histogram(dir + "/covering_span_histogram.csv", st.covering_spans, 10);
  write_histogram(dir + "/context_length_histogram.csv", st.context_lengths, 100);
}

std::string schema_signature(std::string_view example_json) {
  std::string out;
  signature(ojson::parse(example_json), "", out);
  return out;
}

std::vector<std::pair<std::string, std::string>> read_identifier_list(const std::string &path) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError("expected title<TAB>identifier: " + line);
    out.emplace_back(line.substr(0, tab), std::string(trim(line.substr(tab + 1))));
  }
  return out;
}

}  // namespace midr
