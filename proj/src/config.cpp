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

#include "latentdecode/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "latentdecode/artifacts.hpp"
#include "latentdecode/error.hpp"

namespace latentdecode {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void config_fail(const std::string& section, const std::string& key, const std::string& why) {
  fail(ErrorCode::ConfigError, section + "." + key + ": " + why);
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, ErrorCode::ConfigError,
              "line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      cfg.entries_[section];
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::ConfigError,
            "line " + std::to_string(lineno) + ": expected key = value");
    require(!section.empty(), ErrorCode::ConfigError,
            "line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    require(!key.empty(), ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": empty key");
    auto [it, inserted] = cfg.entries_[section].emplace(key, trim(line.substr(eq + 1)));
    if (!inserted) config_fail(section, key, "duplicate key");
  }
  return cfg;
}

ConfigFile ConfigFile::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool ConfigFile::has_section(const std::string& section) const { return entries_.count(section) > 0; }

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto it = entries_.find(section);
  return it != entries_.end() && it->second.count(key) > 0;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key) const {
  if (!has(section, key)) config_fail(section, key, "missing");
  return entries_.at(section).at(key);
}

long ConfigFile::get_int(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) config_fail(section, key, "not an integer: " + v);
  return out;
}

std::uint64_t ConfigFile::get_seed(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    config_fail(section, key, "not a non-negative integer seed: " + v);
  return out;
}

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    config_fail(section, key, "not a finite number: " + v);
  return out;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  config_fail(section, key, "not a boolean: " + v);
}

std::vector<double> ConfigFile::get_doubles(const std::string& section, const std::string& key) const {
  std::string v = get_string(section, key);
  std::replace(v.begin(), v.end(), ',', ' ');
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    double x = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(x))
      config_fail(section, key, "bad list entry: " + tok);
    out.push_back(x);
  }
  if (out.empty()) config_fail(section, key, "empty list");
  return out;
}

void ConfigFile::check_keys(const std::map<std::string, std::vector<std::string>>& allowed) const {
  for (const auto& [section, kv] : entries_) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) fail(ErrorCode::ConfigError, "unknown section [" + section + "]");
    for (const auto& [key, value] : kv)
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        config_fail(section, key, "unknown key");
  }
}

std::string ConfigFile::canonical(const std::vector<std::string>& skip) const {
  std::string out;
  for (const auto& [section, kv] : entries_)
    for (const auto& [key, value] : kv) {
      const std::string name = section + "." + key;
      if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
      out += name + " = " + value + "\n";
    }
  return out;
}

void ExperimentConfig::set_threads(int threads) {
  require(threads >= 1, ErrorCode::ConfigError, "thread count must be >= 1");
  inversion.threads = threads;
}

namespace {

const std::map<std::string, std::vector<std::string>> kAllowedKeys = {
    {"oracle",
     {"seed", "preset", "h_dim", "levels", "level_dim", "embed_dim", "dense_channels", "dense_size",
      "image_size"}},
    {"data",
     {"x_train", "train_ids", "x_test", "test_ids", "train_images", "test_images", "train_latents",
      "roi_masks"}},
    {"synthetic",
     {"n_train", "n_test", "n_voxels", "repetitions", "snr", "seed", "dense_residual", "pure_noise",
      "roi_coupling"}},
    {"inversion",
     {"extract", "cmaes_seed", "cmaes_budget", "cmaes_sigma0", "cmaes_population", "cmaes_ftol",
      "stage2_steps", "stage2_learning_rate", "stage2_decay", "stage2_epsilon", "w_mid", "w_perc",
      "w_pix", "pixel_downsample", "fd_step"}},
    {"ridge", {"lambda", "lambda_candidates", "folds", "zscore"}},
    {"variants", {"random_seed"}},
    {"metrics", {"enabled"}},
    {"roi", {"enabled"}},
    {"output", {"dir"}},
};

int to_int(long v, const std::string& section, const std::string& key, long lo) {
  if (v < lo || v > 1000000000L) config_fail(section, key, "out of range");
  return static_cast<int>(v);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentConfig parse_experiment_config(const ConfigFile& f, const fs::path& base_dir) {
  f.check_keys(kAllowedKeys);
  ExperimentConfig c;

  // oracle
  require(f.has("oracle", "seed"), ErrorCode::ConfigError, "oracle.seed: missing (seeds are never defaulted)");
  c.oracle_seed = f.get_seed("oracle", "seed");
  const std::string preset = f.has("oracle", "preset") ? f.get_string("oracle", "preset") : "toy";
  if (preset == "toy") {
    c.spec = oracle::GeneratorSpec::toy();
  } else if (preset == "full") {
    c.spec = oracle::GeneratorSpec::full_scale();
  } else {
    config_fail("oracle", "preset", "expected toy or full, got " + preset);
  }
  auto dim = [&](const char* key, int& field) {
    if (f.has("oracle", key)) field = to_int(f.get_int("oracle", key), "oracle", key, 1);
  };
  dim("h_dim", c.spec.h_dim);
  dim("levels", c.spec.levels);
  dim("level_dim", c.spec.level_dim);
  dim("embed_dim", c.spec.embed_dim);
  dim("dense_channels", c.spec.dense_channels);
  dim("image_size", c.spec.image_size);
  if (f.has("oracle", "dense_size")) {
    c.spec.dense_h = to_int(f.get_int("oracle", "dense_size"), "oracle", "dense_size", 1);
    c.spec.dense_w = c.spec.dense_h;
  }
  c.spec.z_dim = c.spec.levels * c.spec.level_dim;
  try {
    c.spec.validate();
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, std::string("oracle: ") + e.what());
  }

  // data source
  const bool has_data = f.has_section("data");
  const bool has_synth = f.has_section("synthetic");
  require(has_data != has_synth, ErrorCode::ConfigError,
          has_data ? "exactly one of [data] and [synthetic] may be given, found both"
                   : "exactly one of [data] and [synthetic] is required, found neither");
  if (has_data) {
    DataPaths d;
    d.x_train = resolve(base_dir, f.get_string("data", "x_train"));
    d.train_ids = resolve(base_dir, f.get_string("data", "train_ids"));
    d.x_test = resolve(base_dir, f.get_string("data", "x_test"));
    d.test_ids = resolve(base_dir, f.get_string("data", "test_ids"));
    for (auto [key, field] : {std::pair{"train_images", &d.train_images},
                              std::pair{"test_images", &d.test_images},
                              std::pair{"train_latents", &d.train_latents},
                              std::pair{"roi_masks", &d.roi_masks}})
      if (f.has("data", key)) *field = resolve(base_dir, f.get_string("data", key));
    c.data = d;
  } else {
    SyntheticSettings s;
    auto& b = s.brain;
    require(f.has("synthetic", "seed"), ErrorCode::ConfigError, "synthetic.seed: missing (seeds are never defaulted)");
    b.seed = f.get_seed("synthetic", "seed");
    if (f.has("synthetic", "n_train")) b.n_train = to_int(f.get_int("synthetic", "n_train"), "synthetic", "n_train", 2);
    if (f.has("synthetic", "n_test")) b.n_test = to_int(f.get_int("synthetic", "n_test"), "synthetic", "n_test", 2);
    if (f.has("synthetic", "n_voxels")) b.n_voxels = to_int(f.get_int("synthetic", "n_voxels"), "synthetic", "n_voxels", 7);
    if (f.has("synthetic", "repetitions"))
      b.repetitions = to_int(f.get_int("synthetic", "repetitions"), "synthetic", "repetitions", 1);
    if (f.has("synthetic", "snr")) b.snr = f.get_double("synthetic", "snr");
    require(b.snr > 0, ErrorCode::ConfigError, "synthetic.snr: must be positive");
    if (f.has("synthetic", "dense_residual")) b.dense_residual = f.get_double("synthetic", "dense_residual");
    require(b.dense_residual >= 0, ErrorCode::ConfigError, "synthetic.dense_residual: must be >= 0");
    if (f.has("synthetic", "pure_noise")) b.pure_noise = f.get_bool("synthetic", "pure_noise");
    if (f.has("synthetic", "roi_coupling")) s.roi_coupling = f.get_bool("synthetic", "roi_coupling");
    b.roi_masks = pipeline::default_synthetic_rois(b.n_voxels);
    if (s.roi_coupling) b.couplings = pipeline::default_synthetic_couplings(b.roi_masks);
    c.synthetic = s;
  }

  // inversion
  auto& inv = c.inversion;
  if (f.has("inversion", "extract")) c.extract = f.get_bool("inversion", "extract");
  if (c.extract) {
    require(f.has("inversion", "cmaes_seed"), ErrorCode::ConfigError,
            "inversion.cmaes_seed: missing (seeds are never defaulted)");
    inv.cmaes.seed = f.get_seed("inversion", "cmaes_seed");
  }
  if (f.has("inversion", "cmaes_budget")) inv.cmaes.max_evals = f.get_int("inversion", "cmaes_budget");
  if (f.has("inversion", "cmaes_sigma0")) inv.cmaes.sigma0 = f.get_double("inversion", "cmaes_sigma0");
  if (f.has("inversion", "cmaes_population"))
    inv.cmaes.population = to_int(f.get_int("inversion", "cmaes_population"), "inversion", "cmaes_population", 0);
  if (f.has("inversion", "cmaes_ftol")) inv.cmaes.f_tol = f.get_double("inversion", "cmaes_ftol");
  if (f.has("inversion", "stage2_steps"))
    inv.stage2.steps = to_int(f.get_int("inversion", "stage2_steps"), "inversion", "stage2_steps", 0);
  if (f.has("inversion", "stage2_learning_rate")) inv.stage2.learning_rate = f.get_double("inversion", "stage2_learning_rate");
  if (f.has("inversion", "stage2_decay")) inv.stage2.decay = f.get_double("inversion", "stage2_decay");
  if (f.has("inversion", "stage2_epsilon")) inv.stage2.epsilon = f.get_double("inversion", "stage2_epsilon");
  if (f.has("inversion", "w_mid")) inv.w_mid = f.get_double("inversion", "w_mid");
  if (f.has("inversion", "w_perc")) inv.w_perc = f.get_double("inversion", "w_perc");
  if (f.has("inversion", "w_pix")) inv.w_pix = f.get_double("inversion", "w_pix");
  if (f.has("inversion", "pixel_downsample"))
    inv.pixel_downsample = to_int(f.get_int("inversion", "pixel_downsample"), "inversion", "pixel_downsample", 1);
  if (f.has("inversion", "fd_step")) inv.fd_step = f.get_double("inversion", "fd_step");
  inv.cmaes.dim = c.spec.z_dim;
  try {
    inv.validate();
    (void)inv.cmaes.resolved();
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, std::string("inversion: ") + e.what());
  }

  // ridge
  if (f.has("ridge", "lambda")) {
    c.ridge.fixed_lambda = f.get_double("ridge", "lambda");
    require(*c.ridge.fixed_lambda >= 0, ErrorCode::ConfigError, "ridge.lambda: must be >= 0");
  }
  if (f.has("ridge", "lambda_candidates")) {
    c.ridge.candidates = f.get_doubles("ridge", "lambda_candidates");
    for (double l : c.ridge.candidates)
      require(l > 0, ErrorCode::ConfigError, "ridge.lambda_candidates: entries must be positive");
  }
  if (f.has("ridge", "folds")) c.ridge.folds = to_int(f.get_int("ridge", "folds"), "ridge", "folds", 2);
  if (f.has("ridge", "zscore")) c.ridge.zscore = f.get_bool("ridge", "zscore");

  if (f.has("variants", "random_seed")) c.random_seed = f.get_seed("variants", "random_seed");
  if (f.has("metrics", "enabled")) c.metrics = f.get_bool("metrics", "enabled");
  if (f.has("roi", "enabled")) c.roi = f.get_bool("roi", "enabled");

  if (c.data) {
    if (c.roi) {
      require(!c.data->roi_masks.empty(), ErrorCode::ConfigError,
              "data.roi_masks: required when [roi] enabled = true");
      require(fs::is_regular_file(c.data->roi_masks), ErrorCode::ConfigError,
              "data.roi_masks: file not found: " + c.data->roi_masks.string());
    }
    if (!c.extract)
      require(!c.data->train_latents.empty(), ErrorCode::ConfigError,
              "data.train_latents: required when inversion.extract = false");
  }

  if (f.has("output", "dir")) c.output_dir = resolve(base_dir, f.get_string("output", "dir"));
  c.canonical = f.canonical({"output.dir"});
  c.hash = sha256_hex(c.canonical);
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(ConfigFile::load(path), path.parent_path());
}

}  // namespace latentdecode
