/*
 * Copyright 2026 The hiexpl Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Kept separate from main() so tests can drive it
// in-process.

#ifndef HIEXPL_TOOLS_CLI_HPP_
#define HIEXPL_TOOLS_CLI_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "hiexpl/model.hpp"
#include "json.hpp"

namespace hiexpl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Everything a run depends on. Serialized verbatim into every output.
struct RunConfig {
  std::string data;
  std::string trees;
  std::string model;
  std::string lm;
  std::string out;
  std::string input;
  std::string sentence;
  std::string phrase;
  std::string surrogate_data;
  std::size_t index = 0;
  std::size_t classes = 0;  // 0: one more than the largest label
  std::string method = "soc";
  std::string sampler = "lm";
  std::size_t context_size = 10;
  std::size_t samples = 20;
  std::uint64_t seed = 0;
  bool oracle = false;
  std::vector<std::size_t> grid_n = {10};
  std::vector<std::size_t> grid_k = {20};
  std::vector<std::uint64_t> seeds = {0};
  bool grid_padding = true;
  std::size_t train_size = 400;
  std::size_t eval_size = 60;
  TrainConfig train;
};

nlohmann::json to_json(const RunConfig& config);
// Overwrites the fields present in `j`. Throws hiexpl::InvalidArgument on an
// unknown key or a value of the wrong type.
void apply_json(RunConfig& config, const nlohmann::json& j);

// Runs one command line (argv[0] is the program name). Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hiexpl::cli

#endif  // HIEXPL_TOOLS_CLI_HPP_
