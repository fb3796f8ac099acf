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

// Run manifests written next to every command's outputs.

#ifndef MIDR_MANIFEST_H_
#define MIDR_MANIFEST_H_

#include <cstdint>
#include <string>
#include <vector>

namespace midr {

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string config_digest;  // md5 of the config file, empty when none
  std::uint64_t seed = 0;
  std::string backend;
  std::vector<std::string> outputs;  // paths relative to the output directory
  std::string started;
  std::string finished;
};

std::string utc_timestamp();
std::string file_digest(const std::string &path);  // md5 hex, throws ConfigError

// Writes dir/manifest.json with a digest for every output.
void write_manifest(const std::string &dir, const RunManifest &manifest);

}  // namespace midr

#endif  // MIDR_MANIFEST_H_
