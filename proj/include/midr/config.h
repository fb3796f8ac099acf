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

// Run configuration and grid files: "key = value" lines under [section]
// headers. Unknown sections or keys are errors.

#ifndef MIDR_CONFIG_H_
#define MIDR_CONFIG_H_

#include <string>
#include <vector>

#include "midr/experiment.h"

namespace midr {

struct MidrConfig {
  // [dataset]
  std::string digest_algorithm = "md5";
  std::size_t half_width = 200;
  std::size_t mini_context = 10;
  std::string lexicon;  // extra macro table, optional
  bool keep_numeric = false;
  // [experiment] [features] [backend]
  RunSettings run;
  std::string digest;  // md5 of the file, empty for defaults
};

// Empty path gives the defaults.
MidrConfig load_config(const std::string &path);
MidrConfig parse_config(const std::string &text);

// [grid] declares factor lists to expand (strategy, sampling_factor, pca,
// word_vectors, model), factors left out take all their levels; each
// [config NAME] section adds one configuration.
std::vector<ExperimentConfig> load_grid(const std::string &path);
std::vector<ExperimentConfig> parse_grid(const std::string &text);

}  // namespace midr

#endif  // MIDR_CONFIG_H_
