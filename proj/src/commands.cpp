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

#include "latentdecode/commands.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "latentdecode/artifacts.hpp"
#include "latentdecode/error.hpp"
#include "latentdecode/metrics.hpp"
#include "latentdecode/roi.hpp"
#include "latentdecode/toy_oracle.hpp"

namespace latentdecode {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kNames[] = {"extract", "fit", "decode", "evaluate", "roi", "synthetic"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Oracles {
  oracle::ToyGenerator gen;
  oracle::ToyFeatureExtractor feat;
  explicit Oracles(const ExperimentConfig& c)
      : gen(c.spec, c.oracle_seed), feat(c.spec.image_size, c.spec.h_dim, c.oracle_seed) {}
};

struct Inputs {
  DecodingDataset dataset;
  std::vector<ImageTensor> train_images;
  std::vector<ImageTensor> test_images;  // averaged-id order
  std::vector<std::string> test_ids;
  std::vector<inversion::LatentTriple> known_train_latents;
  std::vector<inversion::LatentTriple> true_test_latents;  // synthetic only
};

std::vector<ImageTensor> read_images(const fs::path& dir, const std::vector<std::string>& ids,
                                     const char* what) {
  require(!dir.empty(), ErrorCode::UpstreamMissing, std::string(what) + " directory not configured");
  std::vector<ImageTensor> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const fs::path p = dir / (id + ".ppm");
    require(fs::is_regular_file(p), ErrorCode::UpstreamMissing, std::string(what) + " missing: " + p.string());
    out.push_back(read_ppm(p));
  }
  return out;
}

Inputs load_inputs(const ExperimentConfig& c, const oracle::GeneratorOracle& gen, bool train_images,
                   bool test_images) {
  Inputs in;
  if (c.synthetic) {
    pipeline::SyntheticBrain brain = pipeline::make_synthetic_brain(c.synthetic->brain, gen);
    in.dataset = std::move(brain.dataset);
    in.train_images = std::move(brain.train_images);
    in.test_images = std::move(brain.test_images);
    in.test_ids = std::move(brain.test_ids);
    in.known_train_latents = std::move(brain.train_latents);
    in.true_test_latents = std::move(brain.test_latents);
    return in;
  }
  const DataPaths& d = *c.data;
  for (const auto& p : {d.x_train, d.train_ids, d.x_test, d.test_ids})
    require(fs::is_regular_file(p), ErrorCode::MissingFile, p.string());
  in.dataset.x_train = read_matrix_d(d.x_train);
  in.dataset.train_stimulus_ids = read_id_list(d.train_ids);
  in.dataset.x_test_trials = read_matrix_d(d.x_test);
  in.dataset.test_trial_stimulus_ids = read_id_list(d.test_ids);
  in.dataset.n_voxels = static_cast<std::size_t>(in.dataset.x_train.cols());
  if (!d.roi_masks.empty()) in.dataset.roi_masks = read_roi_masks(d.roi_masks, in.dataset.n_voxels);
  in.dataset.validate();
  in.test_ids = average_repetitions(in.dataset.x_test_trials, in.dataset.test_trial_stimulus_ids).ids;
  if (train_images) in.train_images = read_images(d.train_images, in.dataset.train_stimulus_ids, "training image");
  if (test_images) in.test_images = read_images(d.test_images, in.test_ids, "test image");
  if (!d.train_latents.empty() && fs::exists(d.train_latents / "H.ldm"))
    in.known_train_latents = inversion::load_latents(d.train_latents, c.spec);
  return in;
}

void log_line(const RunOptions& o, const std::string& msg) {
  if (o.log) *o.log << "[latentdecode] " << msg << '\n' << std::flush;
}

void require_upstream(const fs::path& p, const std::string& producer) {
  require(fs::exists(p), ErrorCode::UpstreamMissing,
          p.string() + " not found; run `" + producer + "` first");
}

std::vector<std::pair<std::string, std::string>> header(const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> h = {
      {"config_sha256", c.hash},
      {"oracle", "toy v" + std::to_string(oracle::kToyArchitectureVersion)},
      {"seed_oracle", std::to_string(c.oracle_seed)}};
  if (c.extract) h.emplace_back("seed_cmaes", std::to_string(c.inversion.cmaes.seed));
  if (c.synthetic) h.emplace_back("seed_synthetic", std::to_string(c.synthetic->brain.seed));
  if (c.random_seed) h.emplace_back("seed_random_variant", std::to_string(*c.random_seed));
  return h;
}

struct Runner {
  const ExperimentConfig& c;
  const RunOptions& o;
  fs::path out;
  Oracles oracles;

  Runner(const ExperimentConfig& config, const RunOptions& options)
      : c(config), o(options), out(config.output_dir), oracles(config) {}

  CommandResult finish(ArtifactWriter& w, const std::string& name) {
    CommandResult r{out / ("manifest_" + name + ".txt"), w.commit(header(c))};
    log_line(o, name + " done, manifest " + r.manifest_hash);
    return r;
  }

  CommandResult extract() {
    require(c.extract, ErrorCode::ConfigError, "inversion.extract = false; nothing to extract");
    Inputs in = load_inputs(c, oracles.gen, true, false);
    log_line(o, "extracting latents for " + std::to_string(in.train_images.size()) + " images");
    auto latents = inversion::extract_latents(in.train_images, oracles.gen, oracles.feat, c.inversion);
    ArtifactWriter w(out, "extract");
    const fs::path dir = w.stage("latents/train/ids.txt").parent_path();
    inversion::save_latents(dir, latents, "source = extraction\n");
    write_id_list(dir / "ids.txt", in.dataset.train_stimulus_ids);
    std::ostringstream losses;
    losses << "item_id,stage1_loss,stage2_loss\n";
    for (std::size_t i = 0; i < latents.size(); ++i)
      losses << in.dataset.train_stimulus_ids[i] << ',' << num(latents[i].stage1_loss) << ','
             << num(latents[i].stage2_loss) << '\n';
    w.write_text("latents/train/losses.csv", losses.str());
    return finish(w, "extract");
  }

  CommandResult fit() {
    Inputs in = load_inputs(c, oracles.gen, false, false);
    std::vector<inversion::LatentTriple> latents;
    if (c.extract) {
      require_upstream(out / "latents/train/H.ldm", "extract");
      latents = inversion::load_latents(out / "latents/train", c.spec);
      const auto ids = read_id_list(out / "latents/train/ids.txt");
      require(ids == in.dataset.train_stimulus_ids, ErrorCode::ShapeMismatch,
              "extracted latents do not match the training stimulus ids");
    } else {
      require(!in.known_train_latents.empty(), ErrorCode::UpstreamMissing, "no known training latents");
      latents = in.known_train_latents;
    }
    log_line(o, "fitting decoders on " + std::to_string(latents.size()) + " samples");
    const auto decoders = pipeline::fit_decoders(in.dataset.x_train, latents, c.spec, c.ridge);
    ArtifactWriter w(out, "fit");
    pipeline::save_decoders(w.stage("decoders/decoders.txt").parent_path(), decoders);
    return finish(w, "fit");
  }

  CommandResult decode() {
    require(c.random_seed.has_value(), ErrorCode::ConfigError,
            "variants.random_seed: missing (seeds are never defaulted)");
    require_upstream(out / "decoders/decoders.txt", "fit");
    Inputs in = load_inputs(c, oracles.gen, false, false);
    const auto decoders = pipeline::load_decoders(out / "decoders", c.spec);
    require(decoders.n_voxels() == in.dataset.n_voxels, ErrorCode::ShapeMismatch,
            "decoders were fitted on a different voxel count");
    const AveragedTrials avg = average_repetitions(in.dataset.x_test_trials, in.dataset.test_trial_stimulus_ids);
    const auto decoded = pipeline::decode_latents(decoders, avg.means);
    log_line(o, "decoded " + std::to_string(decoded.size()) + " test stimuli");
    ArtifactWriter w(out, "decode");
    const fs::path dir = w.stage("decoded/ids.txt").parent_path();
    inversion::save_latents(dir, decoded, "source = decoding\n");
    write_id_list(dir / "ids.txt", avg.ids);
    for (auto v : pipeline::kAllVariants)
      for (std::size_t i = 0; i < decoded.size(); ++i) {
        const ImageTensor img =
            pipeline::reconstruct(oracles.gen, decoded[i], {v, pipeline::random_item_seed(*c.random_seed, i)});
        write_ppm(w.stage("recon/" + avg.ids[i] + "_" + std::string(pipeline::to_string(v)) + ".ppm"), img);
      }
    return finish(w, "decode");
  }

  CommandResult evaluate() {
    require(c.metrics, ErrorCode::ConfigError, "[metrics] enabled = false; nothing to evaluate");
    require_upstream(out / "decoded/ids.txt", "decode");
    Inputs in = load_inputs(c, oracles.gen, false, true);
    const auto ids = read_id_list(out / "decoded/ids.txt");
    require(ids == in.test_ids, ErrorCode::ShapeMismatch, "decoded ids do not match the test stimuli");
    std::ostringstream summary, items;
    summary << "variant,metric,value\n";
    items << "item_id,metric,variant,value\n";
    for (auto v : pipeline::kAllVariants) {
      const std::string vn(pipeline::to_string(v));
      std::vector<ImageTensor> recons;
      for (const auto& id : ids) {
        const fs::path p = out / "recon" / (id + "_" + vn + ".ppm");
        require_upstream(p, "decode");
        recons.push_back(read_ppm(p));
      }
      const auto rep = metrics::evaluate(recons, in.test_images, oracles.feat);
      summary << vn << ",pix_comp," << num(rep.pix_comp) << '\n'
              << vn << ",ssim," << num(rep.ssim_mean) << '\n'
              << vn << ",feature_distance," << num(rep.feature_distance_mean) << '\n';
      for (std::size_t i = 0; i < ids.size(); ++i)
        items << ids[i] << ",pixel_correlation," << vn << ',' << num(rep.pixel_correlation_items[i]) << '\n'
              << ids[i] << ",ssim," << vn << ',' << num(rep.ssim_items[i]) << '\n'
              << ids[i] << ",feature_distance," << vn << ',' << num(rep.feature_distance_items[i]) << '\n';
      items << "summary,pix_comp," << vn << ',' << num(rep.pix_comp) << '\n'
            << "summary,ssim," << vn << ',' << num(rep.ssim_mean) << '\n'
            << "summary,feature_distance," << vn << ',' << num(rep.feature_distance_mean) << '\n';
      log_line(o, vn + ": pix_comp " + num(rep.pix_comp) + ", ssim " + num(rep.ssim_mean));
    }
    ArtifactWriter w(out, "evaluate");
    w.write_text("metrics/metrics.csv", summary.str());
    w.write_text("metrics/items.csv", items.str());
    return finish(w, "evaluate");
  }

  CommandResult roi() {
    require(c.roi, ErrorCode::ConfigError, "[roi] enabled = false; nothing to analyse");
    require_upstream(out / "decoders/decoders.txt", "fit");
    Inputs in = load_inputs(c, oracles.gen, false, false);
    require(!in.dataset.roi_masks.empty(), ErrorCode::ConfigError, "ROI analysis needs ROI masks");
    const auto decoders = pipeline::load_decoders(out / "decoders", c.spec);
    require(decoders.n_voxels() == in.dataset.n_voxels, ErrorCode::ShapeMismatch,
            "decoders were fitted on a different voxel count");
    const auto stats = roi::weight_percentile_map(decoders);
    const auto rows = roi::roi_summary(stats, in.dataset.roi_masks);
    ArtifactWriter w(out, "roi");
    std::ostringstream map, summary;
    roi::write_weight_map_csv(map, stats);
    roi::write_roi_summary_csv(summary, rows);
    w.write_text("roi/weight_map.csv", map.str());
    w.write_text("roi/summary.csv", summary.str());
    for (const auto& mask : in.dataset.roi_masks)
      write_ppm(w.stage("roi/" + mask.name + ".ppm"), roi::roi_maximize(decoders, oracles.gen, mask));
    return finish(w, "roi");
  }

  CommandResult synthetic() {
    require(c.synthetic.has_value(), ErrorCode::ConfigError, "the synthetic command needs a [synthetic] section");
    require(c.random_seed.has_value(), ErrorCode::ConfigError,
            "variants.random_seed: missing (seeds are never defaulted)");
    std::vector<std::pair<std::string, std::string>> steps;
    if (c.extract) steps.emplace_back("extract", extract().manifest_hash);
    steps.emplace_back("fit", fit().manifest_hash);
    steps.emplace_back("decode", decode().manifest_hash);
    if (c.metrics) steps.emplace_back("evaluate", evaluate().manifest_hash);
    if (c.roi) steps.emplace_back("roi", roi().manifest_hash);

    Inputs in = load_inputs(c, oracles.gen, false, false);
    const auto decoded = inversion::load_latents(out / "decoded", c.spec);
    std::vector<inversion::LatentTriple> train = in.known_train_latents;
    std::ostringstream report;
    report << "family,latent_correlation\n";
    const std::pair<const char*, Eigen::MatrixXd (*)(const std::vector<inversion::LatentTriple>&)> fams[] = {
        {"h", pipeline::stack_h}, {"z", pipeline::stack_z}, {"d", pipeline::stack_d}};
    for (const auto& [name, stack] : fams) {
      const Eigen::MatrixXd tr = stack(train);
      const double r = pipeline::latent_correlation(stack(decoded), stack(in.true_test_latents),
                                                    tr.colwise().mean().transpose());
      report << name << ',' << num(r) << '\n';
      log_line(o, std::string("latent correlation ") + name + " = " + num(r));
    }
    ArtifactWriter w(out, "synthetic");
    w.write_text("report.csv", report.str());
    auto h = header(c);
    for (const auto& [step, hash] : steps) h.emplace_back("step_" + step, hash);
    CommandResult r{out / "manifest_synthetic.txt", w.commit(h)};
    log_line(o, "synthetic done, manifest " + r.manifest_hash);
    return r;
  }
};

}  // namespace

std::string_view to_string(Command c) { return kNames[static_cast<int>(c)]; }

std::optional<Command> parse_command(std::string_view name) {
  for (int i = 0; i < 6; ++i)
    if (kNames[i] == name) return static_cast<Command>(i);
  return std::nullopt;
}

CommandResult run_command(Command command, const ExperimentConfig& config, const RunOptions& options) {
  require(!config.output_dir.empty(), ErrorCode::ConfigError, "output.dir: missing (or pass --output)");
  DirectoryLock lock(config.output_dir);
  Runner r(config, options);
  switch (command) {
    case Command::Extract: return r.extract();
    case Command::Fit: return r.fit();
    case Command::Decode: return r.decode();
    case Command::Evaluate: return r.evaluate();
    case Command::Roi: return r.roi();
    case Command::Synthetic: return r.synthetic();
  }
  fail(ErrorCode::ConfigError, "unknown command");
}

}  // namespace latentdecode
