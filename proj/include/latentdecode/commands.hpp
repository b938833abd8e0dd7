// Copyright 2026 The LatentDecode Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LATENTDECODE_COMMANDS_HPP
#define LATENTDECODE_COMMANDS_HPP

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "latentdecode/config.hpp"

namespace latentdecode {

enum class Command { Extract, Fit, Decode, Evaluate, Roi, Synthetic };

std::string_view to_string(Command c);
std::optional<Command> parse_command(std::string_view name);

struct RunOptions {
  std::ostream* log = nullptr;  // progress lines when set
};

struct CommandResult {
  std::filesystem::path manifest;
  std::string manifest_hash;
};

/// Output layout, relative to the output directory:
///   latents/train/{H,Z,D}.ldm, meta.txt, ids.txt       extract
///   decoders/...                                      fit
///   decoded/{H,Z,D}.ldm, ids.txt; recon/<id>_<v>.ppm   decode
///   metrics/metrics.csv, metrics/items.csv            evaluate
///   roi/weight_map.csv, roi/summary.csv, roi/<name>.ppm  roi
///   report.csv                                        synthetic
/// plus manifest_<command>.txt for every command. Takes the directory lock.
CommandResult run_command(Command command, const ExperimentConfig& config,
                          const RunOptions& options = {});

}  // namespace latentdecode

#endif  // LATENTDECODE_COMMANDS_HPP
