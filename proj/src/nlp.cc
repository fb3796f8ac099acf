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

#include "midr/nlp.h"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <random>
#include <set>

#include "json.hpp"
#include "midr/errors.h"
#include "midr/text.h"

namespace midr {

// ---------------------------------------------------------------------------
// DepGraph

std::vector<int> DepGraph::heads(std::size_t n_tokens) const {
  std::vector<int> h(n_tokens, -1);
  for (const auto &e : edges)
    if (e.dependent >= 0 && static_cast<std::size_t>(e.dependent) < n_tokens) h[e.dependent] = e.head;
  return h;
}

std::vector<int> DepGraph::path(int a, int b) const {
  std::map<int, std::vector<int>> adj;
  for (const auto &e : edges) {
    adj[e.head].push_back(e.dependent);
    adj[e.dependent].push_back(e.head);
  }
  std::map<int, int> prev{{a, a}};
  std::deque<int> queue{a};
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    if (u == b) break;
    for (int v : adj[u])
      if (!prev.count(v)) {
        prev[v] = u;
        queue.push_back(v);
      }
  }
  if (!prev.count(b)) return {};
  std::vector<int> out{b};
  while (out.back() != a) out.push_back(prev[out.back()]);
  return {out.rbegin(), out.rend()};
}

int DepGraph::path_length(int a, int b) const {
  if (a == b) return 0;
  auto p = path(a, b);
  return p.empty() ? -1 : static_cast<int>(p.size()) - 1;
}

// ---------------------------------------------------------------------------
// Stub backend

namespace {

const std::map<std::string, std::string, std::less<>> &lexicon() {
  static const auto *table = [] {
    auto *m = new std::map<std::string, std::string, std::less<>>;
    auto add = [&](const char *tag, std::initializer_list<const char *> words) {
      for (const char *w : words) (*m)[w] = tag;
    };
    add("DET", {"the", "a", "an", "this", "these", "those", "each", "every", "some", "any", "no",
                "all", "both", "another", "such"});
    add("ADP", {"of", "in", "on", "at", "by", "for", "with", "from", "to", "into", "over", "under",
                "between", "through", "about", "as", "per", "without", "within", "along",
                "across", "via", "than", "after", "before", "during", "against", "among", "onto",
                "upon", "like", "except"});
    add("PRON", {"it", "its", "they", "them", "we", "us", "he", "she", "i", "you", "their", "our",
                 "his", "her", "which", "who", "whom", "whose", "what", "itself", "one"});
    add("AUX", {"is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had",
                "do", "does", "did", "can", "could", "may", "might", "must", "shall", "should",
                "will", "would"});
    add("CCONJ", {"and", "or", "but", "nor"});
    add("SCONJ", {"if", "because", "while", "although", "where", "when", "whereas", "since",
                  "that", "so", "unless", "whether"});
    add("PART", {"not", "'s"});
    add("ADV", {"also", "only", "very", "then", "thus", "however", "still", "more", "most",
                "nearly", "exactly", "here", "there", "always", "often", "hence", "therefore",
                "even", "just", "virtually", "partly", "numerically", "no longer", "longer",
                "further", "less", "too", "again", "already", "namely"});
    add("VERB", {"let", "denote", "denotes", "denoted", "describes", "describe", "relates",
                 "gives", "give", "given", "states", "state", "depends", "depend", "equals",
                 "equal", "grows", "make", "makes", "occurs", "occur", "vanishes", "exceeds",
                 "multiplies", "counts", "becomes", "become", "varies", "vary", "applied",
                 "holds", "hold", "leads", "lead", "forms", "write", "written", "defined",
                 "define", "defines", "known", "called", "consider", "assuming", "simplify",
                 "stays", "escapes", "computed", "generalized", "expand", "expanding",
                 "integrating", "dividing", "combining", "choosing", "represents", "represent",
                 "reduces", "add", "adds", "derived", "formulated", "involving", "obtain",
                 "obtained", "takes", "take", "find", "used", "use", "uses", "set", "sets",
                 "divided", "increases", "decreases", "rises", "drops", "exist", "exists",
                 "behave", "includes", "included", "identified", "borrow", "financed"});
    add("ADJ", {"required", "dynamic", "intrinsic", "corporate", "constant", "higher", "high",
                "small", "large", "total", "basic", "classical", "optimal", "same", "other",
                "first", "second", "third", "final", "initial", "linear", "positive",
                "negative", "specific", "new", "old", "common", "free", "fixed", "closed",
                "modern", "infinite", "finite", "real", "complex", "certain", "different",
                "several", "many", "few", "own", "present", "levered", "unlevered", "riskless",
                "risky", "horizontal", "fine", "coarse", "laminar", "turbulent", "stationary",
                "incompressible", "isothermal", "adiabatic", "isobaric", "reversible", "ideal",
                "integral", "nonnegative", "each", "equal", "cross-sectional", "viscous",
                "porous", "infectious", "susceptible", "recovered", "exposed", "vital",
                "falling", "empty", "unaffected", "identical", "valuable", "deductible",
                "efficient", "asymmetric", "influential"});
    return m;
  }();
  return *table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() + 1 && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_placeholder(std::string_view s) {
  for (std::string_view p : {"formula", "expression"}) {
    if (s.size() > p.size() && s.substr(0, p.size()) == p) {
      bool digits = true;
      for (char c : s.substr(p.size())) digits &= c >= '0' && c <= '9';
      if (digits) return true;
    }
  }
  return false;
}

bool looks_like_identifier(std::string_view s) {
  if (s.find('_') != std::string_view::npos || s.find('^') != std::string_view::npos ||
      s.find('\\') != std::string_view::npos)
    return true;
  std::size_t len;
  char32_t c = decode_utf8(s, 0, &len);
  if (len != s.size()) return false;
  if (c == 'a' || c == 'A') return false;
  return is_word_codepoint(c) && !(c >= '0' && c <= '9');
}

std::size_t skip_group(std::string_view s, std::size_t i) {
  int depth = 0;
  for (; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i + 1;
  }
  return s.size();
}

bool word_at(std::string_view s, std::size_t i) {
  if (i >= s.size()) return false;
  std::size_t len;
  return is_word_codepoint(decode_utf8(s, i, &len));
}

}  // namespace

StubBackend::StubBackend(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

std::vector<Token> StubBackend::tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len;
    char32_t c = decode_utf8(s, i, &len);
    if (is_unicode_space(c)) {
      i += len;
      continue;
    }
    std::size_t j = i;
    bool macro = c == '\\' && i + 1 < s.size() && is_ascii_alpha(static_cast<unsigned char>(s[i + 1]));
    if (is_word_codepoint(c) || macro) {
      while (j < s.size()) {
        char32_t d = decode_utf8(s, j, &len);
        if (is_word_codepoint(d)) {
          j += len;
          if (d == '_' && j < s.size() && s[j] == '{') j = skip_group(s, j);
        } else if (d == '\\' && j + 1 < s.size() && is_ascii_alpha(static_cast<unsigned char>(s[j + 1]))) {
          ++j;
          while (j < s.size() && is_ascii_alpha(static_cast<unsigned char>(s[j]))) ++j;
          if (j < s.size() && s[j] == '{') j = skip_group(s, j);
        } else if (d == '^' && j + 1 < s.size()) {
          ++j;
          if (s[j] == '{') j = skip_group(s, j);
        } else if ((d == '-' || d == '.' || d == '\'') && word_at(s, j + 1) && j > i &&
                   (d != '.' || (s[j - 1] >= '0' && s[j - 1] <= '9'))) {
          ++j;
        } else {
          break;
        }
      }
    } else {
      j = i + len;
    }
    Token t;
    t.text = std::string(s.substr(i, j - i));
    t.index = static_cast<int>(out.size());
    t.char_start = i;
    t.char_end = j;
    out.push_back(std::move(t));
    i = j;
  }
  return out;
}

std::string StubBackend::tag(std::string_view token, bool sentence_initial) {
  std::size_t len;
  char32_t c = decode_utf8(token, 0, &len);
  if (is_placeholder(token)) return "SYM";
  if (len == token.size() && !is_word_codepoint(c) && c != '\\')
    return is_unicode_punct(c) ? "PUNCT" : "SYM";
  if (is_numeric_text(token)) return "NUM";
  std::string lower = to_lower(token);
  if (auto it = lexicon().find(lower); it != lexicon().end()) {
    if (!(lower == "a" && token == "A" && !sentence_initial)) return it->second;
  }
  if (looks_like_identifier(token)) return "SYM";
  bool upper = c < 0x80 && std::isupper(static_cast<int>(c));
  if (upper && !sentence_initial) return "PROPN";
  if (ends_with(lower, "ly")) return "ADV";
  for (std::string_view suf : {"ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ary",
                               "ian", "ent", "ant"})
    if (ends_with(lower, suf)) return "ADJ";
  if (ends_with(lower, "ing") || ends_with(lower, "ed") || ends_with(lower, "ize") ||
      ends_with(lower, "ise"))
    return "VERB";
  return "NOUN";
}

std::vector<CharSpan> StubBackend::segment_sentences(std::string_view text) {
  std::vector<CharSpan> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) out.emplace_back(b, e);
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      emit(start, i);
      start = i + 1;
    } else if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i;
      while (j + 1 < text.size() && (text[j + 1] == '.' || text[j + 1] == '!' || text[j + 1] == '?'))
        ++j;
      if (j + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[j + 1]))) {
        emit(start, j + 1);
        start = j + 1;
      }
      i = j;
    }
  }
  emit(start, text.size());
  return out;
}

Analysis StubBackend::analyze(std::string_view sentence) {
  Analysis a;
  a.tokens = tokenize(sentence);
  for (std::size_t i = 0; i < a.tokens.size(); ++i) {
    auto &t = a.tokens[i];
    t.pos = tag(t.text, i == 0);
    // Participles after a determiner read as adjectives ("the required rate").
    if (i > 0 && t.pos == "VERB" && a.tokens[i - 1].pos == "DET" &&
        (ends_with(t.text, "ed") || ends_with(t.text, "ing")))
      t.pos = "ADJ";
  }
  if (!a.tokens.empty()) a.graph.root = 0;
  for (int i = 1; i < static_cast<int>(a.tokens.size()); ++i)
    a.graph.edges.push_back({i - 1, i, "dep"});
  auto chunk_tag = [&](std::size_t i) {
    const std::string &p = a.tokens[i].pos;
    return p == "DET" || p == "ADJ" || p == "NOUN" || p == "PROPN";
  };
  auto is_noun = [&](int i) { return a.tokens[i].pos == "NOUN" || a.tokens[i].pos == "PROPN"; };
  const int n = static_cast<int>(a.tokens.size());
  for (int i = 0; i < n;) {
    if (!chunk_tag(i)) {
      ++i;
      continue;
    }
    int j = i + 1;
    while (j < n && chunk_tag(j) && a.tokens[j].pos != "DET") ++j;
    int last = j - 1;
    while (last >= i && !is_noun(last)) --last;
    if (last >= i) a.noun_chunks.emplace_back(i, last + 1);
    i = j;
  }
  return a;
}

Eigen::VectorXd StubBackend::token_vector(std::string_view token) const {
  std::string key = to_lower(token);
  std::uint64_t h = 1469598103934665603ULL ^ seed_;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::mt19937_64 rng(h);
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i)
    v[i] = static_cast<double>(rng() >> 11) * (2.0 / 9007199254740992.0) - 1.0;
  return v;
}

Eigen::VectorXd StubBackend::embed(std::string_view text) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
  int n = 0;
  for (const auto &t : tokenize(text)) {
    sum += token_vector(t.text);
    ++n;
  }
  return n == 0 ? sum : Eigen::VectorXd(sum / n);
}

// ---------------------------------------------------------------------------
// External backend

namespace {

std::vector<std::size_t> cp_to_byte(std::string_view s) {
  CodepointIndex index(s);
  std::vector<std::size_t> m(index.size() + 1);
  for (std::size_t i = 0; i <= index.size(); ++i) m[i] = index.byte_at(i);
  return m;
}

std::size_t map_cp(const std::vector<std::size_t> &m, long long cp) {
  if (cp < 0) return 0;
  return m[std::min<std::size_t>(static_cast<std::size_t>(cp), m.size() - 1)];
}

}  // namespace

ExternalBackend::ExternalBackend(std::string command) : command_(std::move(command)) {
  struct sigaction ign {};
  ign.sa_handler = SIG_IGN;
  sigaction(SIGPIPE, &ign, nullptr);
  int in[2], out[2];
  if (pipe(in) != 0 || pipe(out) != 0)
    throw BackendUnavailable("pipe: " + std::string(std::strerror(errno)));
  pid_t pid = fork();
  if (pid < 0) throw BackendUnavailable("fork: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    dup2(in[0], 0);
    dup2(out[1], 1);
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char *>(nullptr));
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
  try {
    auto info = nlohmann::json::parse(request(R"({"op":"info"})"));
    name_ = info.at("name").get<std::string>();
    dim_ = info.at("dim").get<int>();
  } catch (const nlohmann::json::exception &e) {
    throw BackendUnavailable("backend '" + command_ + "' sent a bad info reply: " + e.what());
  }
}

ExternalBackend::~ExternalBackend() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status;
    waitpid(pid_, &status, 0);
  }
}

std::string ExternalBackend::request(const std::string &line) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::string msg = line + "\n";
  for (std::size_t off = 0; off < msg.size();) {
    ssize_t w = write(to_child_, msg.data() + off, msg.size() - off);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) throw BackendUnavailable("backend '" + command_ + "' is not accepting input");
    off += static_cast<std::size_t>(w);
  }
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return reply;
    }
    char chunk[65536];
    ssize_t r = read(from_child_, chunk, sizeof chunk);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) throw BackendUnavailable("backend '" + command_ + "' exited");
    buffer_.append(chunk, static_cast<std::size_t>(r));
  }
}

std::vector<CharSpan> ExternalBackend::segment_sentences(std::string_view text) {
  nlohmann::json req{{"op", "segment"}, {"text", std::string(text)}};
  auto reply = nlohmann::json::parse(request(req.dump()));
  auto m = cp_to_byte(text);
  std::vector<CharSpan> out;
  for (const auto &s : reply.at("spans"))
    out.emplace_back(map_cp(m, s.at(0).get<long long>()), map_cp(m, s.at(1).get<long long>()));
  return out;
}

Analysis ExternalBackend::analyze(std::string_view sentence) {
  nlohmann::json req{{"op", "analyze"}, {"text", std::string(sentence)}};
  auto reply = nlohmann::json::parse(request(req.dump()));
  auto m = cp_to_byte(sentence);
  Analysis a;
  std::vector<int> heads;
  std::vector<std::string> rels;
  for (const auto &t : reply.at("tokens")) {
    Token tok;
    tok.index = static_cast<int>(a.tokens.size());
    tok.text = t.at("text").get<std::string>();
    tok.pos = t.at("pos").get<std::string>();
    tok.char_start = map_cp(m, t.at("start").get<long long>());
    tok.char_end = map_cp(m, t.at("end").get<long long>());
    heads.push_back(t.value("head", -1));
    rels.push_back(t.value("dep", "dep"));
    a.tokens.push_back(std::move(tok));
  }
  // A provider may split the text into several trees; the first root adopts
  // the others so the result stays a single tree.
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i] < 0 || heads[i] == static_cast<int>(i) ||
        heads[i] >= static_cast<int>(heads.size())) {
      if (a.graph.root < 0) {
        a.graph.root = static_cast<int>(i);
        continue;
      }
      heads[i] = a.graph.root;
    }
    a.graph.edges.push_back({heads[i], static_cast<int>(i), rels[i]});
  }
  for (const auto &c : reply.at("noun_chunks"))
    a.noun_chunks.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
  return a;
}

Eigen::VectorXd ExternalBackend::embed(std::string_view text) {
  nlohmann::json req{{"op", "embed"}, {"text", std::string(text)}};
  auto reply = nlohmann::json::parse(request(req.dump()));
  const auto &vec = reply.at("vector");
  Eigen::VectorXd v(dim_);
  if (static_cast<int>(vec.size()) != dim_)
    throw BackendUnavailable("backend returned a vector of the wrong length");
  for (int i = 0; i < dim_; ++i) v[i] = vec[i].get<double>();
  return v;
}

// ---------------------------------------------------------------------------
// Caching

std::vector<CharSpan> CachingBackend::segment_sentences(std::string_view text) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = segments_.find(text); it != segments_.end()) return it->second;
  }
  auto v = inner_->segment_sentences(text);
  std::lock_guard<std::mutex> lock(mutex_);
  return segments_.emplace(std::string(text), std::move(v)).first->second;
}

Analysis CachingBackend::analyze(std::string_view sentence) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = analyses_.find(sentence); it != analyses_.end()) return it->second;
  }
  auto v = inner_->analyze(sentence);
  std::lock_guard<std::mutex> lock(mutex_);
  return analyses_.emplace(std::string(sentence), std::move(v)).first->second;
}

Eigen::VectorXd CachingBackend::embed(std::string_view text) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = vectors_.find(text); it != vectors_.end()) return it->second;
  }
  auto v = inner_->embed(text);
  std::lock_guard<std::mutex> lock(mutex_);
  return vectors_.emplace(std::string(text), std::move(v)).first->second;
}

std::shared_ptr<NlpBackend> make_backend(BackendOptions options) {
  if (const char *env = std::getenv("MIDR_BACKEND"); env && *env) options.name = env;
  std::shared_ptr<NlpBackend> inner;
  if (options.name == "stub") {
    inner = std::make_shared<StubBackend>(options.dim, options.seed);
  } else if (options.name == "reference") {
    std::string cmd = options.reference_command;
    if (const char *env = std::getenv("MIDR_REFERENCE_COMMAND"); cmd.empty() && env && *env)
      cmd = env;
    if (cmd.empty()) cmd = std::string("python3 ") + MIDR_TOOLS_DIR + "/spacy_backend.py";
    inner = std::make_shared<ExternalBackend>(cmd);
  } else {
    throw BackendUnavailable("unknown backend '" + options.name + "'");
  }
  return std::make_shared<CachingBackend>(inner);
}

}  // namespace midr
