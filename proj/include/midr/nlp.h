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

// Linguistic analyses behind one interface: sentence spans, coarse POS tags,
// dependency trees, noun chunks and word vectors. StubBackend is rule based
// and deterministic; ExternalBackend talks JSON lines to a child process.

#ifndef MIDR_NLP_H_
#define MIDR_NLP_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace midr {

// Universal coarse tags: NOUN PROPN ADJ ADP DET VERB AUX PRON ADV CCONJ SCONJ
// PART NUM PUNCT SYM X.
struct Token {
  std::string text;
  std::string pos;
  int index = 0;
  std::size_t char_start = 0;  // byte offsets into the analyzed text
  std::size_t char_end = 0;
};

struct DepEdge {
  int head = 0;
  int dependent = 0;
  std::string relation;
};

struct DepGraph {
  int root = -1;
  std::vector<DepEdge> edges;

  // Number of edges on the undirected path between two tokens, or -1 when
  // they are not connected.
  int path_length(int a, int b) const;
  // Tokens on the path from a to b, both ends included.
  std::vector<int> path(int a, int b) const;
  std::vector<int> heads(std::size_t n_tokens) const;
};

// Token index range [first, second).
using TokenSpan = std::pair<int, int>;

struct Analysis {
  std::vector<Token> tokens;
  DepGraph graph;
  std::vector<TokenSpan> noun_chunks;
};

// Byte range [first, second) into the segmented text.
using CharSpan = std::pair<std::size_t, std::size_t>;

class NlpBackend {
 public:
  virtual ~NlpBackend() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual std::vector<CharSpan> segment_sentences(std::string_view text) = 0;
  virtual Analysis analyze(std::string_view sentence) = 0;
  // Mean of token vectors; zero vector for text without tokens.
  virtual Eigen::VectorXd embed(std::string_view text) = 0;
};

class StubBackend : public NlpBackend {
 public:
  explicit StubBackend(int dim = 300, std::uint64_t seed = 17);

  std::string name() const override { return "stub"; }
  int dim() const override { return dim_; }
  std::vector<CharSpan> segment_sentences(std::string_view text) override;
  Analysis analyze(std::string_view sentence) override;
  Eigen::VectorXd embed(std::string_view text) override;

  Eigen::VectorXd token_vector(std::string_view token) const;
  static std::vector<Token> tokenize(std::string_view text);
  static std::string tag(std::string_view token, bool sentence_initial);

 private:
  int dim_;
  std::uint64_t seed_;
};

// Runs `command` through /bin/sh and exchanges one JSON object per line.
//   {"op":"info"}                 -> {"name":..., "dim":...}
//   {"op":"segment","text":T}     -> {"spans":[[b,e],...]}
//   {"op":"analyze","text":T}     -> {"tokens":[{"text","pos","start","end","head","dep"}],
//                                     "noun_chunks":[[b,e],...]}
//   {"op":"embed","text":T}       -> {"vector":[...]}
// Character offsets on the wire are code points; head is -1 for the root.
// Calls are serialized.
class ExternalBackend : public NlpBackend {
 public:
  explicit ExternalBackend(std::string command);
  ~ExternalBackend() override;
  ExternalBackend(const ExternalBackend &) = delete;
  ExternalBackend &operator=(const ExternalBackend &) = delete;

  std::string name() const override { return name_; }
  int dim() const override { return dim_; }
  std::vector<CharSpan> segment_sentences(std::string_view text) override;
  Analysis analyze(std::string_view sentence) override;
  Eigen::VectorXd embed(std::string_view text) override;

 private:
  std::string request(const std::string &line);

  std::string command_;
  std::string name_;
  int dim_ = 0;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::mutex mutex_;
};

// Memoizes another backend; safe to share between threads.
class CachingBackend : public NlpBackend {
 public:
  explicit CachingBackend(std::shared_ptr<NlpBackend> inner) : inner_(std::move(inner)) {}

  std::string name() const override { return inner_->name(); }
  int dim() const override { return inner_->dim(); }
  std::vector<CharSpan> segment_sentences(std::string_view text) override;
  Analysis analyze(std::string_view sentence) override;
  Eigen::VectorXd embed(std::string_view text) override;

 private:
  std::shared_ptr<NlpBackend> inner_;
  std::mutex mutex_;
  std::map<std::string, std::vector<CharSpan>, std::less<>> segments_;
  std::map<std::string, Analysis, std::less<>> analyses_;
  std::map<std::string, Eigen::VectorXd, std::less<>> vectors_;
};

struct BackendOptions {
  std::string name = "stub";  // "stub" or "reference"
  int dim = 300;
  std::uint64_t seed = 17;
  std::string reference_command;  // empty: python3 tools/spacy_backend.py
};

// Applies the MIDR_BACKEND environment override, then builds a cached
// backend. Throws BackendUnavailable for unknown names or a dead provider.
std::shared_ptr<NlpBackend> make_backend(BackendOptions options);

}  // namespace midr

#endif  // MIDR_NLP_H_
