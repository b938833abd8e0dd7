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

#include "latentdecode/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "latentdecode/error.hpp"
#include "latentdecode/rng.hpp"

namespace latentdecode::pipeline {

VoxelNormalizer VoxelNormalizer::fit(const Eigen::MatrixXd& x, bool enabled) {
  VoxelNormalizer n;
  n.enabled = enabled;
  n.mean = x.colwise().mean().transpose();
  n.scale = Eigen::VectorXd::Ones(x.cols());
  if (enabled && x.rows() > 1) {
    for (Eigen::Index v = 0; v < x.cols(); ++v) {
      const double sd = std::sqrt((x.col(v).array() - n.mean[v]).square().sum() /
                                  static_cast<double>(x.rows() - 1));
      if (sd > 0.0) n.scale[v] = sd;
    }
  }
  return n;
}

Eigen::MatrixXd VoxelNormalizer::apply(const Eigen::MatrixXd& x) const {
  if (!enabled) return x;
  require(x.cols() == mean.size(), ErrorCode::ShapeMismatch, "normalizer voxel count mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

namespace {

template <typename Get>
Eigen::MatrixXd stack(const std::vector<LatentTriple>& latents, Get get) {
  if (latents.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(latents.size()), get(latents.front()).size());
  for (std::size_t i = 0; i < latents.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = get(latents[i]).transpose();
  return m;
}

ridge::RidgeModel fit_family(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const RidgeSettings& s, std::vector<double>& cv_mse) {
  double lambda = 0.0;
  if (s.fixed_lambda) {
    lambda = *s.fixed_lambda;
  } else {
    const ridge::LambdaSelection sel = ridge::select_lambda(x, y, s.candidates, s.folds);
    lambda = sel.lambda;
    cv_mse = sel.cv_mse;
  }
  return ridge::fit(x, y, lambda);
}

}  // namespace

Eigen::MatrixXd stack_h(const std::vector<LatentTriple>& l) {
  return stack(l, [](const LatentTriple& t) -> const Eigen::VectorXd& { return t.h; });
}
Eigen::MatrixXd stack_z(const std::vector<LatentTriple>& l) {
  return stack(l, [](const LatentTriple& t) -> const Eigen::VectorXd& { return t.z.values(); });
}
Eigen::MatrixXd stack_d(const std::vector<LatentTriple>& l) {
  return stack(l, [](const LatentTriple& t) -> const Eigen::VectorXd& { return t.d; });
}

DecoderSet fit_decoders(const Eigen::MatrixXd& x_train, const std::vector<LatentTriple>& latents,
                        const oracle::GeneratorSpec& spec, const RidgeSettings& settings) {
  require(static_cast<std::size_t>(x_train.rows()) == latents.size(), ErrorCode::ShapeMismatch,
          "training responses and latents are not row-aligned");
  require(latents.size() >= 2, ErrorCode::TooFewSamples, "need at least two training samples");
  DecoderSet set;
  set.spec = spec;
  set.normalizer = VoxelNormalizer::fit(x_train, settings.zscore);
  const Eigen::MatrixXd x = set.normalizer.apply(x_train);
  const Eigen::MatrixXd h = stack_h(latents), z = stack_z(latents), d = stack_d(latents);
  require(h.cols() == spec.h_dim && z.cols() == spec.z_dim && d.cols() == spec.dense_dim(),
          ErrorCode::ShapeMismatch, "latent dimensions do not match the generator topology");
  set.model_h = fit_family(x, h, settings, set.cv_mse_h);
  set.model_z = fit_family(x, z, settings, set.cv_mse_z);
  set.model_d = fit_family(x, d, settings, set.cv_mse_d);
  return set;
}

std::vector<LatentTriple> decode_normalized(const DecoderSet& decoders, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd h = ridge::predict(decoders.model_h, x);
  const Eigen::MatrixXd z = ridge::predict(decoders.model_z, x);
  const Eigen::MatrixXd d = ridge::predict(decoders.model_d, x);
  std::vector<LatentTriple> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto& t = out[static_cast<std::size_t>(i)];
    t.h = h.row(i).transpose();
    t.z = oracle::NoiseVector(z.row(i).transpose(), decoders.spec.level_dim);
    t.d = d.row(i).transpose();
  }
  return out;
}

std::vector<LatentTriple> decode_latents(const DecoderSet& decoders, const Eigen::MatrixXd& x_test_avg) {
  require(static_cast<std::size_t>(x_test_avg.cols()) == decoders.n_voxels(), ErrorCode::ShapeMismatch,
          "test responses have " + std::to_string(x_test_avg.cols()) + " voxels, decoders expect " +
              std::to_string(decoders.n_voxels()));
  return decode_normalized(decoders, decoders.normalizer.apply(x_test_avg));
}

void save_decoders(const std::filesystem::path& dir, const DecoderSet& decoders) {
  std::filesystem::create_directories(dir);
  ridge::save_model(dir / "h", decoders.model_h);
  ridge::save_model(dir / "z", decoders.model_z);
  ridge::save_model(dir / "d", decoders.model_d);
  const auto& n = decoders.normalizer;
  write_matrix_d(dir / "voxel_mean.ldm", n.mean.transpose());
  write_matrix_d(dir / "voxel_scale.ldm", n.scale.transpose());
  std::ofstream meta(dir / "decoders.txt", std::ios::trunc);
  if (!meta) fail(ErrorCode::IoFailure, "cannot write decoder metadata");
  meta << "format_version = 1\n"
       << "zscore = " << (n.enabled ? "true" : "false") << "\n"
       << "h_dim = " << decoders.spec.h_dim << "\n"
       << "z_dim = " << decoders.spec.z_dim << "\n"
       << "dense_dim = " << decoders.spec.dense_dim() << "\n";
}

DecoderSet load_decoders(const std::filesystem::path& dir, const oracle::GeneratorSpec& spec) {
  if (!std::filesystem::exists(dir / "decoders.txt"))
    fail(ErrorCode::UpstreamMissing, "no decoders at " + dir.string());
  DecoderSet set;
  set.spec = spec;
  set.model_h = ridge::load_model(dir / "h");
  set.model_z = ridge::load_model(dir / "z");
  set.model_d = ridge::load_model(dir / "d");
  std::ifstream meta(dir / "decoders.txt");
  std::string line;
  while (std::getline(meta, line))
    if (line.rfind("zscore", 0) == 0) set.normalizer.enabled = line.find("true") != std::string::npos;
  set.normalizer.mean = read_matrix_d(dir / "voxel_mean.ldm").transpose();
  set.normalizer.scale = read_matrix_d(dir / "voxel_scale.ldm").transpose();
  require(set.model_h.n_targets() == spec.h_dim && set.model_z.n_targets() == spec.z_dim &&
              set.model_d.n_targets() == spec.dense_dim(),
          ErrorCode::ShapeMismatch, "stored decoders do not match the generator topology");
  require(set.model_z.n_inputs() == set.model_h.n_inputs() &&
              set.model_d.n_inputs() == set.model_h.n_inputs(),
          ErrorCode::ShapeMismatch, "stored decoders disagree on voxel count");
  return set;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Random: return "random";
    case Variant::Noise: return "noise";
    case Variant::Dense: return "dense";
  }
  return "unknown";
}

std::uint64_t random_item_seed(std::uint64_t base_seed, std::size_t index) {
  return mix_seed(base_seed, 0x52414e44ULL + index);
}

ImageTensor reconstruct(const oracle::GeneratorOracle& gen, const LatentTriple& t,
                        const ReconstructionVariant& variant) {
  switch (variant.kind) {
    case Variant::Random: {
      Rng rng(variant.noise_seed);
      return gen.generate(t.h, gen.make_noise(rng.normal_vector(gen.spec().z_dim)));
    }
    case Variant::Noise:
      return gen.generate(t.h, t.z);
    case Variant::Dense:
      return gen.generate_from_dense(t.h, t.z.tail(), t.d);
  }
  fail(ErrorCode::ConfigError, "unknown reconstruction variant");
}

// ------------------------------------------------------------ synthetic brain

std::vector<RoiMask> default_synthetic_rois(int n_voxels) {
  static const char* kNames[] = {"V1", "V2", "V3", "V4", "LOC", "FFA", "PPA"};
  std::vector<RoiMask> rois;
  const int n = static_cast<int>(std::size(kNames));
  require(n_voxels >= n, ErrorCode::ConfigError, "need at least one voxel per synthetic ROI");
  for (int r = 0; r < n; ++r) {
    RoiMask m;
    m.name = kNames[r];
    for (int v = n_voxels * r / n; v < n_voxels * (r + 1) / n; ++v) m.voxel_indices.push_back(static_cast<std::size_t>(v));
    rois.push_back(std::move(m));
  }
  return rois;
}

std::vector<VoxelCoupling> default_synthetic_couplings(const std::vector<RoiMask>& rois) {
  std::vector<VoxelCoupling> out;
  const double n = static_cast<double>(rois.size());
  for (std::size_t r = 0; r < rois.size(); ++r) {
    // Early areas lean on the dense vector, later ones on instance features.
    const double t = rois.size() > 1 ? static_cast<double>(r) / (n - 1.0) : 0.5;
    VoxelCoupling c;
    c.voxels = rois[r].voxel_indices;
    c.gain_h = 0.2 + 1.6 * t;
    c.gain_d = 1.8 - 1.6 * t;
    c.gain_z = 1.0;
    out.push_back(std::move(c));
  }
  return out;
}

SyntheticBrain make_synthetic_brain(const SyntheticConfig& cfg, const oracle::GeneratorOracle& gen) {
  require(cfg.n_train >= 2 && cfg.n_test >= 1 && cfg.n_voxels >= 1 && cfg.repetitions >= 1,
          ErrorCode::ConfigError, "synthetic sizes must be positive (n_train >= 2)");
  require(cfg.snr > 0.0, ErrorCode::ConfigError, "synthetic snr must be positive");
  const auto& spec = gen.spec();
  Rng rng(mix_seed(cfg.seed, 0x62726169ULL));

  auto draw_latents = [&](int n) {
    std::vector<LatentTriple> out(static_cast<std::size_t>(n));
    for (auto& t : out) {
      t.h = rng.normal_vector(spec.h_dim);
      t.z = gen.make_noise(rng.normal_vector(spec.z_dim));
      t.d = gen.dense_layer(t.z.head()) + cfg.dense_residual * rng.normal_vector(spec.dense_dim());
    }
    return out;
  };

  SyntheticBrain b;
  b.train_latents = draw_latents(cfg.n_train);
  b.test_latents = draw_latents(cfg.n_test);

  // Per-family mixing normalized so each family contributes comparable variance.
  const Eigen::Index nv = cfg.n_voxels;
  const Eigen::MatrixXd g_h = rng.normal_matrix(nv, spec.h_dim) / std::sqrt(double(spec.h_dim));
  const Eigen::MatrixXd g_z = rng.normal_matrix(nv, spec.z_dim) / std::sqrt(double(spec.z_dim));
  const Eigen::MatrixXd g_d = rng.normal_matrix(nv, spec.dense_dim()) / std::sqrt(double(spec.dense_dim()));
  Eigen::VectorXd gain_h = Eigen::VectorXd::Ones(nv), gain_z = gain_h, gain_d = gain_h;
  std::vector<bool> silent(static_cast<std::size_t>(nv), false);
  for (const auto& c : cfg.couplings)
    for (std::size_t v : c.voxels) {
      require(v < static_cast<std::size_t>(nv), ErrorCode::IndexOutOfRange, "coupling voxel out of range");
      const auto i = static_cast<Eigen::Index>(v);
      gain_h[i] = c.silent ? 0.0 : c.gain_h;
      gain_z[i] = c.silent ? 0.0 : c.gain_z;
      gain_d[i] = c.silent ? 0.0 : c.gain_d;
      silent[v] = c.silent;
    }

  auto signal = [&](const std::vector<LatentTriple>& lat) {
    Eigen::MatrixXd s = gain_h.asDiagonal() * (g_h * stack_h(lat).transpose()) +
                        gain_z.asDiagonal() * (g_z * stack_z(lat).transpose()) +
                        gain_d.asDiagonal() * (g_d * stack_d(lat).transpose());
    return Eigen::MatrixXd(s.transpose());  // n x voxels
  };
  const Eigen::MatrixXd s_train = signal(b.train_latents);
  const Eigen::MatrixXd s_test = signal(b.test_latents);

  // Noise level per voxel from the training signal variance.
  Eigen::VectorXd noise_sd(nv);
  for (Eigen::Index v = 0; v < nv; ++v) {
    const double mean = s_train.col(v).mean();
    const double var = (s_train.col(v).array() - mean).square().sum() / double(std::max(1, cfg.n_train - 1));
    noise_sd[v] = silent[static_cast<std::size_t>(v)] ? 0.0
                  : cfg.pure_noise                     ? 1.0
                                                       : std::sqrt(var / cfg.snr);
  }
  const double signal_scale = cfg.pure_noise ? 0.0 : 1.0;

  auto& ds = b.dataset;
  ds.n_voxels = static_cast<std::size_t>(nv);
  ds.x_train.resize(cfg.n_train, nv);
  for (int i = 0; i < cfg.n_train; ++i) {
    for (Eigen::Index v = 0; v < nv; ++v) ds.x_train(i, v) = signal_scale * s_train(i, v) + noise_sd[v] * rng.normal();
    ds.train_stimulus_ids.push_back("train_" + std::to_string(i));
  }
  ds.x_test_trials.resize(static_cast<Eigen::Index>(cfg.n_test) * cfg.repetitions, nv);
  for (int i = 0; i < cfg.n_test; ++i) b.test_ids.push_back("test_" + std::to_string(i));
  Eigen::Index row = 0;
  for (int r = 0; r < cfg.repetitions; ++r)
    for (int i = 0; i < cfg.n_test; ++i, ++row) {
      for (Eigen::Index v = 0; v < nv; ++v)
        ds.x_test_trials(row, v) = signal_scale * s_test(i, v) + noise_sd[v] * rng.normal();
      ds.test_trial_stimulus_ids.push_back(b.test_ids[static_cast<std::size_t>(i)]);
    }
  ds.roi_masks = cfg.roi_masks;

  for (const auto& t : b.train_latents) b.train_images.push_back(gen.generate_from_dense(t.h, t.z.tail(), t.d));
  for (const auto& t : b.test_latents) b.test_images.push_back(gen.generate_from_dense(t.h, t.z.tail(), t.d));
  ds.validate();
  return b;
}

double latent_correlation(const Eigen::MatrixXd& decoded, const Eigen::MatrixXd& truth,
                          const Eigen::VectorXd& train_mean) {
  require(decoded.rows() == truth.rows() && decoded.cols() == truth.cols() &&
              train_mean.size() == truth.cols(),
          ErrorCode::ShapeMismatch, "latent correlation shapes differ");
  const Eigen::ArrayXXd a = (decoded.rowwise() - train_mean.transpose()).array();
  const Eigen::ArrayXXd b = (truth.rowwise() - train_mean.transpose()).array();
  const Eigen::ArrayXXd ac = a - a.mean();
  const Eigen::ArrayXXd bc = b - b.mean();
  const double den = std::sqrt(ac.square().sum() * bc.square().sum());
  if (!(den > 0.0)) fail(ErrorCode::ZeroVariance, "latent correlation undefined for constant input");
  return (ac * bc).sum() / den;
}

// ------------------------------------------------------------ experiment

ExperimentReport run_experiment(const ExperimentInputs& in, const oracle::GeneratorOracle& gen,
                                const oracle::FeatureExtractorOracle& feat,
                                const ExperimentOptions& opt) {
  in.dataset.validate();
  ExperimentReport rep;
  if (opt.extract) {
    require(in.train_images.size() == in.dataset.train_stimulus_ids.size(), ErrorCode::ShapeMismatch,
            "one training image per training stimulus is required for extraction");
    rep.train_latents = inversion::extract_latents(in.train_images, gen, feat, opt.inversion);
  } else {
    require(in.known_train_latents.size() == in.dataset.train_stimulus_ids.size(),
            ErrorCode::ShapeMismatch, "known latents must align with training stimuli");
    rep.train_latents = in.known_train_latents;
  }
  rep.decoders = fit_decoders(in.dataset.x_train, rep.train_latents, gen.spec(), opt.ridge);

  const AveragedTrials avg = average_repetitions(in.dataset.x_test_trials, in.dataset.test_trial_stimulus_ids);
  rep.test_ids = avg.ids;
  rep.decoded = decode_latents(rep.decoders, avg.means);

  for (Variant v : kAllVariants) {
    VariantResult vr{v, {}, std::nullopt};
    for (std::size_t i = 0; i < rep.decoded.size(); ++i)
      vr.images.push_back(reconstruct(gen, rep.decoded[i], {v, random_item_seed(opt.random_seed, i)}));
    if (opt.metrics) {
      require(in.test_images.size() == vr.images.size(), ErrorCode::ShapeMismatch,
              "metrics need one ground-truth image per test stimulus");
      vr.metrics = metrics::evaluate(vr.images, in.test_images, feat);
    }
    rep.variants.push_back(std::move(vr));
  }
  return rep;
}

}  // namespace latentdecode::pipeline
