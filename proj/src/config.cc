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

#include "midr/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "midr/errors.h"
#include "midr/manifest.h"
#include "midr/text.h"

namespace midr {

namespace pt = boost::property_tree;

namespace {

pt::ptree parse_ini(const std::string &text) {
  std::istringstream in(text);
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  return tree;
}

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string where(const std::string &section, const std::string &key) {
  return "[" + section + "] " + key;
}

long to_long(const std::string &section, const std::string &key, const std::string &v) {
  try {
    std::size_t used = 0;
    long n = std::stol(v, &used);
    if (used == v.size()) return n;
  } catch (const std::exception &) {
  }
  throw ConfigError(where(section, key) + ": expected an integer, got '" + v + "'");
}

double to_double(const std::string &section, const std::string &key, const std::string &v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception &) {
  }
  throw ConfigError(where(section, key) + ": expected a number, got '" + v + "'");
}

bool to_bool(const std::string &section, const std::string &key, const std::string &v) {
  std::string l = to_lower(v);
  if (l == "yes" || l == "true" || l == "1" || l == "on") return true;
  if (l == "no" || l == "false" || l == "0" || l == "off") return false;
  throw ConfigError(where(section, key) + ": expected yes or no, got '" + v + "'");
}

int to_pca(const std::string &section, const std::string &key, const std::string &v) {
  if (to_lower(v) == "none") return 0;
  long n = to_long(section, key, v);
  if (n < 0) throw ConfigError(where(section, key) + ": negative component count");
  return static_cast<int>(n);
}

template <class F>
auto checked(const std::string &section, const std::string &key, F f) {
  try {
    return f();
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    throw ConfigError(where(section, key) + ": " + e.what());
  }
}

std::vector<std::string> split_list(const std::string &v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) {
    cur = std::string(trim(cur));
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace

MidrConfig parse_config(const std::string &text) {
  MidrConfig c;
  pt::ptree tree = parse_ini(text);
  for (const auto &[section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("key '" + section + "' outside a section");
    for (const auto &[key, node] : body) {
      const std::string v(trim(node.data()));
      if (section == "dataset") {
        if (key == "digest") c.digest_algorithm = v;
        else if (key == "half_width") c.half_width = static_cast<std::size_t>(to_long(section, key, v));
        else if (key == "mini_context") c.mini_context = static_cast<std::size_t>(to_long(section, key, v));
        else if (key == "lexicon") c.lexicon = v;
        else if (key == "keep_numeric") c.keep_numeric = to_bool(section, key, v);
        else throw ConfigError("unknown key " + where(section, key));
      } else if (section == "experiment") {
        if (key == "seed") c.run.seed = static_cast<std::uint64_t>(to_long(section, key, v));
        else if (key == "folds") c.run.folds = static_cast<int>(to_long(section, key, v));
        else if (key == "threshold") c.run.threshold = to_double(section, key, v);
        else if (key == "reduction") c.run.reduction = checked(section, key, [&] { return parse_reduction(v); });
        else if (key == "workers") c.run.workers = static_cast<int>(to_long(section, key, v));
        else throw ConfigError("unknown key " + where(section, key));
      } else if (section == "features") {
        if (key == "text_representation")
          c.run.text_representation = checked(section, key, [&] { return parse_text_representation(v); });
        else if (key == "groups") {
          c.run.groups.clear();
          for (char g : v) {
            if (g == ',' || g == ' ') continue;
            if (std::string("PBTDIV").find(g) == std::string::npos)
              throw ConfigError(where(section, key) + ": unknown feature group '" + std::string(1, g) + "'");
            c.run.groups.insert(g);
          }
        } else throw ConfigError("unknown key " + where(section, key));
      } else if (section == "backend") {
        if (key == "name") c.run.backend.name = v;
        else if (key == "dim") c.run.backend.dim = static_cast<int>(to_long(section, key, v));
        else if (key == "seed") c.run.backend.seed = static_cast<std::uint64_t>(to_long(section, key, v));
        else if (key == "command") c.run.backend.reference_command = v;
        else throw ConfigError("unknown key " + where(section, key));
      } else {
        throw ConfigError("unknown section [" + section + "]");
      }
    }
  }
  if (c.run.folds < 2) throw ConfigError("[experiment] folds: need at least two");
  if (c.run.workers < 1) throw ConfigError("[experiment] workers: need at least one");
  if (c.run.backend.dim < 1) throw ConfigError("[backend] dim: must be positive");
  return c;
}

MidrConfig load_config(const std::string &path) {
  if (path.empty()) return MidrConfig{};
  const std::string text = slurp(path);
  MidrConfig c = parse_config(text);
  c.digest = hex_digest(text);
  return c;
}

std::vector<ExperimentConfig> parse_grid(const std::string &text) {
  pt::ptree tree = parse_ini(text);
  std::vector<ExperimentConfig> out;
  for (const auto &[section, body] : tree) {
    if (section == "grid") {
      std::vector<Strategy> strategies{Strategy::kNNAN, Strategy::kNC};
      std::vector<int> factors{1, 2, 4}, pcas{0, 50, 100, 200};
      std::vector<bool> wvs{false, true};
      std::vector<ModelKind> models = all_models();
      for (const auto &[key, node] : body) {
        auto items = split_list(node.data());
        if (items.empty()) throw ConfigError(where(section, key) + ": empty list");
        if (key == "strategy") {
          strategies.clear();
          for (auto &i : items) strategies.push_back(checked(section, key, [&] { return parse_strategy(i); }));
        } else if (key == "sampling_factor") {
          factors.clear();
          for (auto &i : items) factors.push_back(static_cast<int>(to_long(section, key, i)));
        } else if (key == "pca") {
          pcas.clear();
          for (auto &i : items) pcas.push_back(to_pca(section, key, i));
        } else if (key == "word_vectors") {
          wvs.clear();
          for (auto &i : items) wvs.push_back(to_bool(section, key, i));
        } else if (key == "model") {
          models.clear();
          for (auto &i : items) models.push_back(checked(section, key, [&] { return parse_model(i); }));
        } else {
          throw ConfigError("unknown key " + where(section, key));
        }
      }
      for (Strategy s : strategies)
        for (int f : factors)
          for (int p : pcas)
            for (bool w : wvs)
              for (ModelKind m : models) out.push_back({s, f, p, w, m});
    } else if (section.rfind("config", 0) == 0) {
      ExperimentConfig c;
      bool has_model = false, has_strategy = false;
      for (const auto &[key, node] : body) {
        const std::string v(trim(node.data()));
        if (key == "strategy") c.strategy = checked(section, key, [&] { return parse_strategy(v); }), has_strategy = true;
        else if (key == "sampling_factor") c.sampling_factor = static_cast<int>(to_long(section, key, v));
        else if (key == "pca") c.pca = to_pca(section, key, v);
        else if (key == "word_vectors") c.word_vectors = to_bool(section, key, v);
        else if (key == "model") c.model = checked(section, key, [&] { return parse_model(v); }), has_model = true;
        else throw ConfigError("unknown key " + where(section, key));
      }
      if (!has_model || !has_strategy)
        throw ConfigError("[" + section + "] needs at least strategy and model");
      out.push_back(c);
    } else {
      throw ConfigError("unknown grid section [" + section + "]");
    }
  }
  for (const auto &c : out)
    if (c.sampling_factor < 1) throw ConfigError("sampling_factor must be at least 1 in " + c.key());
  std::vector<ExperimentConfig> unique;
  for (const auto &c : out)
    if (std::find(unique.begin(), unique.end(), c) == unique.end()) unique.push_back(c);
  if (unique.empty()) throw ConfigError("grid file declares no configurations");
  return unique;
}

std::vector<ExperimentConfig> load_grid(const std::string &path) { return parse_grid(slurp(path)); }

}  // namespace midr
