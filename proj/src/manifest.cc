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

#include "midr/manifest.h"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "midr/errors.h"
#include "midr/text.h"

namespace midr {

std::string utc_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_digest(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex_digest(ss.str(), "md5");
}

void write_manifest(const std::string &dir, const RunManifest &m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["arguments"] = m.arguments;
  j["config_digest"] = m.config_digest;
  j["seed"] = m.seed;
  j["backend"] = m.backend;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (const auto &o : m.outputs) {
    std::filesystem::path p = std::filesystem::path(dir) / o;
    outs.push_back({{"path", o}, {"md5", std::filesystem::exists(p) ? file_digest(p.string()) : ""}});
  }
  j["outputs"] = std::move(outs);
  j["started"] = m.started;
  j["finished"] = m.finished;
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / "manifest.json");
  if (!out) throw ConfigError("cannot write manifest in " + dir);
  out << j.dump(2) << "\n";
}

}  // namespace midr
