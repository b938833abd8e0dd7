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

#ifndef LATENTDECODE_CONFIG_HPP
#define LATENTDECODE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latentdecode/inversion.hpp"
#include "latentdecode/oracle.hpp"
#include "latentdecode/pipeline.hpp"

namespace latentdecode {

/// Flat sectioned key/value file:
///
///   # comment
///   [section]
///   key = value
///
/// Keys are unique per section. Values are trimmed; nothing is nested.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key) const;
  std::uint64_t get_seed(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;

  /// Fails with ConfigError on any key outside `allowed` for that section,
  /// and on unknown sections.
  void check_keys(const std::map<std::string, std::vector<std::string>>& allowed) const;

  /// `section.key = value` lines in sorted order, skipping `skip`.
  std::string canonical(const std::vector<std::string>& skip = {}) const;

  const std::map<std::string, std::map<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> entries_;
};

struct DataPaths {
  std::filesystem::path x_train;
  std::filesystem::path train_ids;
  std::filesystem::path x_test;
  std::filesystem::path test_ids;
  std::filesystem::path train_images;   // directory of <id>.ppm, optional
  std::filesystem::path test_images;    // directory of <id>.ppm, optional
  std::filesystem::path train_latents;  // directory with H/Z/D.ldm, optional
  std::filesystem::path roi_masks;      // optional unless ROI analysis runs
};

struct SyntheticSettings {
  pipeline::SyntheticConfig brain;
  bool roi_coupling = true;  // default ROI blocks with graded h/d coupling
};

struct ExperimentConfig {
  std::uint64_t oracle_seed = 0;
  oracle::GeneratorSpec spec;
  std::optional<DataPaths> data;
  std::optional<SyntheticSettings> synthetic;
  inversion::InversionConfig inversion;
  bool extract = true;
  pipeline::RidgeSettings ridge;
  std::optional<std::uint64_t> random_seed;
  bool metrics = true;
  bool roi = false;
  std::filesystem::path output_dir;
  std::string canonical;  // normalized text, output directory excluded
  std::string hash;       // SHA-256 of `canonical`

  /// Thread count applied to every parallel stage.
  void set_threads(int threads);
};

/// Validates and types a config. Relative data paths resolve against
/// `base_dir`. All checks here run before any computation.
ExperimentConfig parse_experiment_config(const ConfigFile& file,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace latentdecode

#endif  // LATENTDECODE_CONFIG_HPP
