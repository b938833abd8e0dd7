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

#ifndef LATENTDECODE_PIPELINE_HPP
#define LATENTDECODE_PIPELINE_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "latentdecode/dataio.hpp"
#include "latentdecode/inversion.hpp"
#include "latentdecode/metrics.hpp"
#include "latentdecode/oracle.hpp"
#include "latentdecode/ridge.hpp"

namespace latentdecode::pipeline {

using inversion::LatentTriple;

/// Per-voxel standardization learned on the training responses. Voxels with
/// zero variance are only centered.
struct VoxelNormalizer {
  bool enabled = false;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static VoxelNormalizer fit(const Eigen::MatrixXd& x, bool enabled);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct RidgeSettings {
  std::optional<double> fixed_lambda;
  std::vector<double> candidates{0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0};
  int folds = 5;
  bool zscore = true;
};

/// The three latent decoders (instance features, noise, dense), all fitted on
/// the same training rows.
struct DecoderSet {
  ridge::RidgeModel model_h;
  ridge::RidgeModel model_z;
  ridge::RidgeModel model_d;
  oracle::GeneratorSpec spec;
  VoxelNormalizer normalizer;
  std::vector<double> cv_mse_h, cv_mse_z, cv_mse_d;

  std::size_t n_voxels() const { return static_cast<std::size_t>(model_h.n_inputs()); }
};

/// Stacks the latents family by family into n x dim matrices.
Eigen::MatrixXd stack_h(const std::vector<LatentTriple>& latents);
Eigen::MatrixXd stack_z(const std::vector<LatentTriple>& latents);
Eigen::MatrixXd stack_d(const std::vector<LatentTriple>& latents);

DecoderSet fit_decoders(const Eigen::MatrixXd& x_train, const std::vector<LatentTriple>& latents,
                        const oracle::GeneratorSpec& spec, const RidgeSettings& settings);

/// Predicts one triple per row of repetition-averaged responses.
std::vector<LatentTriple> decode_latents(const DecoderSet& decoders, const Eigen::MatrixXd& x_test_avg);

/// Predicts from inputs already in the decoders' (normalized) input space.
std::vector<LatentTriple> decode_normalized(const DecoderSet& decoders, const Eigen::MatrixXd& x);

void save_decoders(const std::filesystem::path& dir, const DecoderSet& decoders);
DecoderSet load_decoders(const std::filesystem::path& dir, const oracle::GeneratorSpec& spec);

enum class Variant { Random, Noise, Dense };

std::string_view to_string(Variant v);
inline constexpr Variant kAllVariants[] = {Variant::Random, Variant::Noise, Variant::Dense};

struct ReconstructionVariant {
  Variant kind = Variant::Dense;
  std::uint64_t noise_seed = 0;  // Random only
};

/// RANDOM: decoded h with a seeded standard-normal z.
/// NOISE:  decoded h and z, dense layer computed from z.
/// DENSE:  decoded h, z tail and dense vector.
ImageTensor reconstruct(const oracle::GeneratorOracle& gen, const LatentTriple& triple,
                        const ReconstructionVariant& variant);

/// Seed used for item `index` of a RANDOM reconstruction run.
std::uint64_t random_item_seed(std::uint64_t base_seed, std::size_t index);

// ------------------------------------------------------------ synthetic brain

/// Voxel group with its own per-family signal gains. Silent groups carry no
/// signal and no noise.
struct VoxelCoupling {
  std::vector<std::size_t> voxels;
  double gain_h = 1.0;
  double gain_z = 1.0;
  double gain_d = 1.0;
  bool silent = false;
};

struct SyntheticConfig {
  int n_train = 200;
  int n_test = 20;
  int n_voxels = 500;
  int repetitions = 35;
  double snr = 10.0;               // signal variance / noise variance, per trial
  double dense_residual = 0.5;     // std of the dense refinement beyond dense_layer(z.head)
  bool pure_noise = false;         // responses independent of the latents
  std::uint64_t seed = 0;
  std::vector<VoxelCoupling> couplings;  // voxels not listed use unit gains
  std::vector<RoiMask> roi_masks;
};

/// Linear-mixing "brain" with known ground truth at every stage.
struct SyntheticBrain {
  DecodingDataset dataset;
  std::vector<LatentTriple> train_latents;
  std::vector<LatentTriple> test_latents;  // in stimulus-id order of the test set
  std::vector<ImageTensor> train_images;
  std::vector<ImageTensor> test_images;
  std::vector<std::string> test_ids;       // unique, first-appearance order
};

SyntheticBrain make_synthetic_brain(const SyntheticConfig& config, const oracle::GeneratorOracle& gen);

/// Seven contiguous ROI blocks named after the visual areas, with early areas
/// coupled mostly to the dense vector and later areas mostly to the instance
/// features.
std::vector<RoiMask> default_synthetic_rois(int n_voxels);
std::vector<VoxelCoupling> default_synthetic_couplings(const std::vector<RoiMask>& rois);

/// Pearson correlation between decoded and true latents of one family over
/// all entries, after subtracting the per-dimension training mean.
double latent_correlation(const Eigen::MatrixXd& decoded, const Eigen::MatrixXd& truth,
                          const Eigen::VectorXd& train_mean);

// ------------------------------------------------------------ experiment

struct VariantResult {
  Variant variant;
  std::vector<ImageTensor> images;
  std::optional<metrics::MetricReport> metrics;
};

struct ExperimentOptions {
  inversion::InversionConfig inversion;
  RidgeSettings ridge;
  bool extract = true;        // invert training images instead of using known latents
  bool metrics = true;
  bool roi = false;
  std::uint64_t random_seed = 0;
};

struct ExperimentInputs {
  DecodingDataset dataset;
  std::vector<ImageTensor> train_images;
  std::vector<ImageTensor> test_images;          // aligned with averaged test ids
  std::vector<LatentTriple> known_train_latents;  // used when extract == false
};

struct ExperimentReport {
  std::vector<LatentTriple> train_latents;
  DecoderSet decoders;
  std::vector<std::string> test_ids;
  std::vector<LatentTriple> decoded;
  std::vector<VariantResult> variants;
};

ExperimentReport run_experiment(const ExperimentInputs& inputs, const oracle::GeneratorOracle& gen,
                                const oracle::FeatureExtractorOracle& feat,
                                const ExperimentOptions& options);

}  // namespace latentdecode::pipeline

#endif  // LATENTDECODE_PIPELINE_HPP
