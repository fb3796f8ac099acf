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

#include "midr/features.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "midr/errors.h"
#include "midr/text.h"

namespace midr {

const char *text_representation_name(TextRepresentation r) {
  switch (r) {
    case TextRepresentation::kCounts: return "counts";
    case TextRepresentation::kNgrams: return "ngrams";
    default: return "both";
  }
}

TextRepresentation parse_text_representation(std::string_view name) {
  if (name == "counts") return TextRepresentation::kCounts;
  if (name == "ngrams") return TextRepresentation::kNgrams;
  if (name == "both") return TextRepresentation::kBoth;
  throw ConfigError("unknown text representation '" + std::string(name) + "'");
}

bool FeatureConfig::group_on(char g) const {
  if (g == 'V' && !use_word_vectors) return false;
  return enabled_groups.count(g) > 0;
}

namespace {

struct SlotDef {
  const char *name;
  const char *source;  // base sequence
  bool ngrams;
  const char *description;
};

// Text slots in catalog order.
const std::vector<SlotDef> &slot_defs() {
  static const std::vector<SlotDef> defs = {
      {"T01", "T01", false, "two tokens before and after the candidate"},
      {"T02", "T02", false, "POS tags of T01"},
      {"T03", "T03", false, "tokens and POS tags of T01"},
      {"T04", "T01", true, "1-3 grams of T01"},
      {"T05", "T02", true, "1-3 grams of T02"},
      {"T06", "T03", true, "1-3 grams of T03"},
      {"T07", "T07", false, "three tokens before and after the identifier"},
      {"T08", "T08", false, "POS tags of T07"},
      {"T09", "T09", false, "tokens and POS tags of T07"},
      {"T10", "T07", true, "1-3 grams of T07"},
      {"T11", "T08", true, "1-3 grams of T08"},
      {"T12", "T09", true, "1-3 grams of T09"},
      {"T13", "T13", false, "text between identifier and candidate"},
      {"T14", "T14", false, "POS tags of T13"},
      {"T15", "T15", false, "tokens and POS tags of T13"},
      {"T16", "T13", true, "1-3 grams of T13"},
      {"T17", "T14", true, "1-3 grams of T14"},
      {"T18", "T15", true, "1-3 grams of T15"},
      {"T19", "T19", false, "first verb between identifier and candidate"},
      {"D02", "D02", false, "first three path tokens from the candidate"},
      {"D03", "D03", false, "POS tags of D02"},
      {"D04", "D04", false, "tokens and POS tags of D02"},
      {"D05", "D02", true, "1-3 grams of D02"},
      {"D06", "D03", true, "1-3 grams of D03"},
      {"D07", "D04", true, "1-3 grams of D04"},
      {"D08", "D08", false, "first three path tokens from the identifier"},
      {"D09", "D09", false, "POS tags of D08"},
      {"D10", "D10", false, "tokens and POS tags of D08"},
      {"D11", "D08", true, "1-3 grams of D08"},
      {"D12", "D09", true, "1-3 grams of D09"},
      {"D13", "D10", true, "1-3 grams of D10"},
  };
  return defs;
}

struct NumericDef {
  const char *name;
  const char *description;
};

const std::vector<NumericDef> &numeric_defs() {
  static const std::vector<NumericDef> defs = {
      {"P01", "<candidate> <identifier>"},
      {"P02", "<identifier> <candidate>"},
      {"P03", "<identifier> (is|are) <candidate>"},
      {"P04", "<identifier> (is|are) the <candidate>"},
      {"P05", "<identifier> (is|are) denoted by <candidate>"},
      {"P06", "<identifier> (is|are) denoted by the <candidate>"},
      {"P07", "let <identifier> be denoted by <candidate>"},
      {"P08", "let <identifier> be denoted by the <candidate>"},
      {"P09", "<identifier> denote(s?) <candidate>"},
      {"P10", "<identifier> denote(s?) the <candidate>"},
      {"B01", "colon between identifier and candidate"},
      {"B02", "only a colon between identifier and candidate"},
      {"B03", "comma between identifier and candidate"},
      {"B04", "only a comma between identifier and candidate"},
      {"B05", "other math between identifier and candidate"},
      {"B06", "candidate contains another identifier"},
      {"B07", "candidate inside parentheses"},
      {"B08", "identifier inside parentheses"},
      {"B09", "identifier before candidate"},
      {"D01", "shortest dependency path length"},
      {"D14", "candidate governs its path edge"},
      {"D15", "identifier governs its path edge"},
      {"I01", "token distance"},
      {"I02", "character distance to the first identifier occurrence"},
      {"I03", "relative term frequency of the candidate"},
  };
  return defs;
}

const char *kVectorSlots[] = {"V01", "V02", "V03", "V04"};
const char *kVectorText[] = {"two tokens before and after the candidate",
                             "three tokens before and after the identifier",
                             "first verb between candidate and identifier",
                             "text between candidate and identifier"};

bool slot_enabled(const SlotDef &d, const FeatureConfig &config) {
  if (!config.group_on(d.name[0])) return false;
  if (std::string_view(d.name) == "T19") return true;
  switch (config.text_representation) {
    case TextRepresentation::kCounts: return !d.ngrams;
    case TextRepresentation::kNgrams: return d.ngrams;
    default: return true;
  }
}

std::vector<std::string> slot_terms(const std::vector<std::string> &seq, bool ngrams) {
  if (!ngrams) return seq;
  std::vector<std::string> out;
  for (std::size_t n = 1; n <= 3; ++n)
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
      std::string g = seq[i];
      for (std::size_t k = 1; k < n; ++k) g += " " + seq[i + k];
      out.push_back(std::move(g));
    }
  return out;
}

bool in_spans(const std::vector<TokenSpan> &spans, int i) {
  for (auto [b, e] : spans)
    if (i >= b && i < e) return true;
  return false;
}

// Token text as it enters the vocabulary.
std::string slot_text(const Analysis &a, const std::vector<TokenSpan> &ids, int i) {
  if (in_spans(ids, i)) return "<id>";
  if (is_placeholder_token(a.tokens[i].text)) return "<math>";
  return to_lower(a.tokens[i].text);
}

bool is_math_token(const Token &t) { return t.pos == "SYM" || is_placeholder_token(t.text); }

// Head-most token of a span.
int anchor(const std::vector<int> &heads, int b, int e) {
  for (int i = b; i < e; ++i)
    if (heads[i] < b || heads[i] >= e) return i;
  return b;
}

std::vector<std::string> proxy_tokens(std::string_view text) {
  return split_whitespace(normalize_description(text));
}

}  // namespace

std::vector<std::string> numeric_columns(const FeatureConfig &config) {
  std::vector<std::string> out;
  for (const auto &d : numeric_defs())
    if (config.group_on(d.name[0])) out.push_back(d.name);
  return out;
}

std::map<std::string, ArticleProxy> build_article_proxies(const Dataset &dataset) {
  std::map<std::string, ArticleProxy> out;
  for (const auto &article : dataset.articles) {
    ArticleProxy &proxy = out[article.title];
    // passage pieces keyed by article code point offset
    std::map<std::size_t, const std::string *> pieces;
    for (const auto &entry : article.identifiers) {
      for (const auto &ex : entry.examples) {
        auto [it, fresh] = proxy.first_occurrence.emplace(entry.identifier, ex.id_article_offset);
        if (!fresh) it->second = std::min(it->second, ex.id_article_offset);
        pieces.emplace(ex.id_article_offset - ex.id_passage_offset, &ex.passage);
      }
    }
    std::string merged;
    std::size_t covered = 0;  // article offset reached so far
    bool any = false;
    for (auto [start, text] : pieces) {
      std::size_t len = codepoint_count(*text);
      if (!any || start >= covered) {
        if (any) merged += "\n\n";
        merged += *text;
        covered = start + len;
      } else if (start + len > covered) {
        merged += cp_substr(*text, covered - start, len);
        covered = start + len;
      }
      any = true;
    }
    std::vector<CanonicalIdentifier> none;
    proxy.tokens = proxy_tokens(render_surface(std::string_view(merged), none).text);
  }
  return out;
}

RawFeatures extract_features(const ExampleContext &ctx, const Candidate &cand,
                             NlpBackend &backend, const FeatureConfig &config,
                             const ArticleProxy *proxy) {
  RawFeatures f;
  std::map<std::string, double> num;
  for (const auto &d : numeric_defs()) num[d.name] = 0.0;

  const Sentence &sent = ctx.sentences.at(cand.sentence_index);
  const Analysis &a = sent.analysis;
  const int n = static_cast<int>(a.tokens.size());
  const auto &ids = sent.identifier_tokens;
  const int cb = cand.token_begin, ce = cand.token_end;

  // identifier occurrence nearest to the candidate
  int ib = -1, ie = -1, best = 0;
  for (auto [b, e] : ids) {
    int d = b >= ce ? b - ce : cb - e;
    if (ib < 0 || d < best) ib = b, ie = e, best = d;
  }
  const bool same = ib >= 0;

  auto window = [&](int b, int e, int w) {
    std::vector<int> idx;
    for (int i = std::max(0, b - w); i < b; ++i) idx.push_back(i);
    for (int i = e; i < std::min(n, e + w); ++i) idx.push_back(i);
    return idx;
  };
  auto fill = [&](const char *tok, const char *pos, const char *both, const std::vector<int> &idx) {
    auto &t = f.sequences[tok];
    auto &p = f.sequences[pos];
    auto &tp = f.sequences[both];
    for (int i : idx) {
      t.push_back(slot_text(a, ids, i));
      p.push_back(a.tokens[i].pos);
      tp.push_back(t.back() + "/" + p.back());
    }
  };
  auto raw_text = [&](const std::vector<int> &idx) {
    std::string s;
    for (int i : idx) {
      if (!s.empty()) s += ' ';
      s += a.tokens[i].text;
    }
    return s;
  };

  std::vector<int> cand_win = window(cb, ce, 2);
  fill("T01", "T02", "T03", cand_win);
  std::vector<int> id_win, between;
  if (same) {
    id_win = window(ib, ie, 3);
    for (int i = std::min(ie, ce); i < std::max(ib, cb); ++i) between.push_back(i);
  }
  fill("T07", "T08", "T09", id_win);
  fill("T13", "T14", "T15", between);
  f.sequences["T19"];
  std::string verb;
  for (int i : between)
    if (a.tokens[i].pos == "VERB" || a.tokens[i].pos == "AUX") {
      verb = a.tokens[i].text;
      f.sequences["T19"].push_back(to_lower(verb));
      break;
    }

  // patterns over a marker sequence
  {
    std::vector<std::string> seq;
    for (int i = 0; i < n;) {
      if (i == cb) {
        seq.push_back("<CAND>");
        i = ce;
      } else if (in_spans(ids, i)) {
        seq.push_back("<ID>");
        while (i < n && in_spans(ids, i)) ++i;
      } else {
        seq.push_back(to_lower(a.tokens[i].text));
        ++i;
      }
    }
    using Pattern = std::vector<std::vector<std::string>>;
    static const std::vector<std::pair<const char *, Pattern>> patterns = {
        {"P01", {{"<CAND>"}, {"<ID>"}}},
        {"P02", {{"<ID>"}, {"<CAND>"}}},
        {"P03", {{"<ID>"}, {"is", "are"}, {"<CAND>"}}},
        {"P04", {{"<ID>"}, {"is", "are"}, {"the"}, {"<CAND>"}}},
        {"P05", {{"<ID>"}, {"is", "are"}, {"denoted"}, {"by"}, {"<CAND>"}}},
        {"P06", {{"<ID>"}, {"is", "are"}, {"denoted"}, {"by"}, {"the"}, {"<CAND>"}}},
        {"P07", {{"let"}, {"<ID>"}, {"be"}, {"denoted"}, {"by"}, {"<CAND>"}}},
        {"P08", {{"let"}, {"<ID>"}, {"be"}, {"denoted"}, {"by"}, {"the"}, {"<CAND>"}}},
        {"P09", {{"<ID>"}, {"denote", "denotes"}, {"<CAND>"}}},
        {"P10", {{"<ID>"}, {"denote", "denotes"}, {"the"}, {"<CAND>"}}},
    };
    for (const auto &[name, pat] : patterns) {
      for (std::size_t s = 0; s + pat.size() <= seq.size(); ++s) {
        bool ok = true;
        for (std::size_t k = 0; k < pat.size() && ok; ++k)
          ok = std::find(pat[k].begin(), pat[k].end(), seq[s + k]) != pat[k].end();
        if (ok) {
          num[name] = 1.0;
          break;
        }
      }
    }
  }

  // basics
  std::vector<int> depth(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    const std::string &t = a.tokens[i].text;
    depth[i + 1] = std::max(0, depth[i] + (t == "(" ? 1 : 0) - (t == ")" ? 1 : 0));
  }
  for (int i = cb; i < ce; ++i)
    if (is_math_token(a.tokens[i])) num["B06"] = 1.0;
  num["B07"] = depth[cb] > 0 ? 1.0 : 0.0;
  if (same) {
    int colons = 0, commas = 0;
    for (int i : between) {
      const Token &t = a.tokens[i];
      colons += t.text == ":";
      commas += t.text == ",";
      if (is_math_token(t) || in_spans(ids, i)) num["B05"] = 1.0;
    }
    num["B01"] = colons > 0;
    num["B02"] = colons == 1 && between.size() == 1;
    num["B03"] = commas > 0;
    num["B04"] = commas == 1 && between.size() == 1;
    num["B08"] = depth[ib] > 0 ? 1.0 : 0.0;
    num["B09"] = ib < cb ? 1.0 : 0.0;
  }

  // dependency path
  const double sentinel = n + 1;
  num["D01"] = sentinel;
  num["I01"] = sentinel;
  for (const char *s : {"D02", "D03", "D04", "D08", "D09", "D10"}) f.sequences[s];
  if (same) {
    num["I01"] = std::abs(cb - ib);
    std::vector<int> heads = a.graph.heads(n);
    int ca = anchor(heads, cb, ce), ia = anchor(heads, ib, ie);
    std::vector<int> path = a.graph.path(ca, ia);
    if (path.size() >= 2) {
      num["D01"] = static_cast<double>(path.size() - 1);
      std::vector<int> from_c(path.begin() + 1, path.begin() + std::min<std::size_t>(4, path.size()));
      std::vector<int> from_i(path.rbegin() + 1, path.rbegin() + std::min<std::size_t>(4, path.size()));
      f.sequences.erase("D02");
      f.sequences.erase("D03");
      f.sequences.erase("D04");
      f.sequences.erase("D08");
      f.sequences.erase("D09");
      f.sequences.erase("D10");
      fill("D02", "D03", "D04", from_c);
      fill("D08", "D09", "D10", from_i);
      num["D14"] = heads[path[1]] == path[0] ? 1.0 : 0.0;
      num["D15"] = heads[path[path.size() - 2]] == path.back() ? 1.0 : 0.0;
    }
  }

  // IR
  if (proxy) {
    auto first = proxy->first_occurrence.find(ctx.identifier);
    if (first != proxy->first_occurrence.end() && ctx.example) {
      CodepointIndex cpi(ctx.example->passage);
      std::size_t src = ctx.surface.to_source(cand.char_start);
      double pos = static_cast<double>(ctx.passage_article_offset + cpi.cp_at(src));
      num["I02"] = std::abs(pos - static_cast<double>(first->second));
    }
    std::vector<std::string> needle = proxy_tokens(cand.text);
    const auto &hay = proxy->tokens;
    if (!needle.empty() && !hay.empty()) {
      std::size_t count = 0;
      for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i)
        if (std::equal(needle.begin(), needle.end(), hay.begin() + i)) ++count;
      num["I03"] = static_cast<double>(count) / static_cast<double>(hay.size());
    }
  }

  for (const auto &d : numeric_defs()) f.numeric.emplace_back(d.name, num[d.name]);

  if (config.group_on('V')) {
    f.vectors.push_back(backend.embed(raw_text(cand_win)));
    f.vectors.push_back(backend.embed(raw_text(id_win)));
    f.vectors.push_back(backend.embed(verb));
    f.vectors.push_back(backend.embed(raw_text(between)));
  }
  return f;
}

Vocabulary Vocabulary::fit(const std::vector<RawFeatures> &rows, const FeatureConfig &config,
                           int vector_dim) {
  Vocabulary v;
  v.config_ = config;
  v.vector_dim_ = vector_dim;
  for (const auto &d : numeric_defs())
    if (config.group_on(d.name[0])) v.columns_.push_back({d.name, d.name[0], d.description});
  for (const auto &d : slot_defs()) {
    if (!slot_enabled(d, config)) continue;
    std::set<std::string> terms;
    for (const auto &r : rows) {
      auto it = r.sequences.find(d.source);
      if (it == r.sequences.end()) continue;
      for (auto &t : slot_terms(it->second, d.ngrams)) terms.insert(std::move(t));
    }
    for (const auto &t : terms)
      v.columns_.push_back({std::string(d.name) + "=" + t, d.name[0], d.description});
  }
  if (config.group_on('V'))
    for (int s = 0; s < 4; ++s)
      for (int k = 0; k < vector_dim; ++k)
        v.columns_.push_back({std::string(kVectorSlots[s]) + "_" + std::to_string(k), 'V',
                              kVectorText[s]});
  for (std::size_t i = 0; i < v.columns_.size(); ++i)
    v.index_[v.columns_[i].name] = static_cast<int>(i);
  return v;
}

FeatureMatrix Vocabulary::transform(const std::vector<RawFeatures> &rows) const {
  FeatureMatrix m;
  m.columns = columns_;
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                   static_cast<Eigen::Index>(columns_.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const RawFeatures &row = rows[r];
    for (const auto &[name, value] : row.numeric) {
      auto it = index_.find(name);
      if (it != index_.end()) m.values(r, it->second) = value;
    }
    for (const auto &d : slot_defs()) {
      if (!slot_enabled(d, config_)) continue;
      auto seq = row.sequences.find(d.source);
      if (seq == row.sequences.end()) continue;
      for (const auto &t : slot_terms(seq->second, d.ngrams)) {
        auto it = index_.find(std::string(d.name) + "=" + t);
        if (it != index_.end()) m.values(r, it->second) += 1.0;
      }
    }
    if (config_.group_on('V')) {
      if (row.vectors.size() != 4)
        throw CatalogMismatch("row lacks word vectors");
      auto base = index_.at("V01_0");
      for (int s = 0; s < 4; ++s) {
        if (row.vectors[s].size() != vector_dim_)
          throw CatalogMismatch("word vector dimension mismatch");
        m.values.row(r).segment(base + s * vector_dim_, vector_dim_) = row.vectors[s].transpose();
      }
    }
  }
  return m;
}

TransformState fit_transforms(const FeatureMatrix &train, const FeatureConfig &config) {
  TransformState st;
  for (const auto &c : train.columns) st.columns.push_back(c.name);
  const Eigen::MatrixXd &x = train.values;
  const Eigen::Index n = x.rows(), d = x.cols();
  st.mean = n > 0 ? Eigen::VectorXd(x.colwise().mean().transpose()) : Eigen::VectorXd::Zero(d);
  st.scale = Eigen::VectorXd::Ones(d);
  if (n > 0) {
    Eigen::MatrixXd c = x.rowwise() - st.mean.transpose();
    for (Eigen::Index j = 0; j < d; ++j) {
      double sd = std::sqrt(c.col(j).squaredNorm() / static_cast<double>(n));
      if (sd > 1e-12) st.scale(j) = sd;
    }
  }
  if (config.pca_components) {
    const int k = *config.pca_components;
    if (k <= 0) throw DimensionalityError("PCA components must be positive");
    Eigen::MatrixXd z = (x.rowwise() - st.mean.transpose()).array().rowwise() /
                        st.scale.transpose().array();
    Eigen::MatrixXd basis;
    Eigen::VectorXd values;
    // eigenvectors of the smaller Gram matrix
    if (d <= n) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z.transpose() * z);
      values = es.eigenvalues().reverse();
      basis = es.eigenvectors().rowwise().reverse();
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z * z.transpose());
      values = es.eigenvalues().reverse();
      Eigen::MatrixXd u = es.eigenvectors().rowwise().reverse();
      basis = Eigen::MatrixXd::Zero(d, values.size());
      for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values(i) > 0) basis.col(i) = z.transpose() * u.col(i) / std::sqrt(values(i));
    }
    double top = values.size() ? std::max(values(0), 0.0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (values(i) > top * 1e-10 && values(i) > 1e-12) ++rank;
    if (k > rank)
      throw DimensionalityError("PCA with " + std::to_string(k) + " components exceeds rank " +
                                std::to_string(rank));
    Eigen::MatrixXd b = basis.leftCols(k);
    for (int i = 0; i < k; ++i) {
      Eigen::Index arg;
      b.col(i).cwiseAbs().maxCoeff(&arg);
      if (b(arg, i) < 0) b.col(i) *= -1.0;
    }
    st.pca_basis = std::move(b);
  }
  return st;
}

Eigen::MatrixXd apply_transforms(const FeatureMatrix &m, const TransformState &st) {
  if (m.columns.size() != st.columns.size())
    throw CatalogMismatch("matrix has " + std::to_string(m.columns.size()) +
                          " columns, state expects " + std::to_string(st.columns.size()));
  for (std::size_t i = 0; i < m.columns.size(); ++i)
    if (m.columns[i].name != st.columns[i])
      throw CatalogMismatch("column " + std::to_string(i) + " is '" + m.columns[i].name +
                            "', state expects '" + st.columns[i] + "'");
  Eigen::MatrixXd z = (m.values.rowwise() - st.mean.transpose()).array().rowwise() /
                      st.scale.transpose().array();
  if (st.pca_basis) return z * *st.pca_basis;
  return z;
}

std::string feature_matrix_csv(const FeatureMatrix &m) {
  std::ostringstream out;
  for (std::size_t j = 0; j < m.columns.size(); ++j)
    out << (j ? "," : "") << csv_field(m.columns[j].name);
  out << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m.values(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace midr
