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

#ifndef LATENTDECODE_INVERSION_HPP
#define LATENTDECODE_INVERSION_HPP

#include <utility>
#include <vector>

#include "latentdecode/cmaes.hpp"
#include "latentdecode/gradopt.hpp"
#include "latentdecode/oracle.hpp"

namespace latentdecode::inversion {

struct InversionConfig {
  cmaes::CmaesConfig cmaes;       // dim and mean0 are bound to the generator
  gradopt::RmspropConfig stage2;
  double w_mid = 1.0;
  double w_perc = 1.0;
  double w_pix = 1.0;
  int pixel_downsample = 64;      // clamped to the image size
  double fd_step = 1e-4;          // only for oracles without gradients
  int threads = 1;                // images processed concurrently

  void validate() const;
};

/// Latents recovered for one image.
struct LatentTriple {
  oracle::InstanceFeature h;
  oracle::NoiseVector z;
  oracle::DenseVector d;
  double stage1_loss = 0.0;
  double stage2_loss = 0.0;
};

/// Mean squared difference of the mid-level feature maps.
double mid_feature_loss(const ImageTensor& candidate, const ImageTensor& target,
                        const oracle::FeatureExtractorOracle& feat);

/// Per layer: unit-normalize the channel vector at every location, take the
/// squared distance, average over locations. Layers are averaged with equal
/// weight.
double perceptual_distance(const ImageTensor& a, const ImageTensor& b,
                           const oracle::FeatureExtractorOracle& feat);

/// Area-average both images to size x size, then mean squared error over
/// pixels and channels.
double pixel_mse_down(const ImageTensor& a, const ImageTensor& b, int size);

/// Area-average resampling (box filter with fractional coverage).
ImageTensor area_downsample(const ImageTensor& image, int size);

/// Target-side features cached once per image; evaluates the losses and
/// their image-space gradients for many candidates.
class LossTarget {
 public:
  LossTarget(const ImageTensor& target, const oracle::FeatureExtractorOracle& feat,
             int pixel_size);

  double mid(const ImageTensor& candidate) const;

  struct Combined {
    double total = 0.0;
    double mid = 0.0;
    double perceptual = 0.0;
    double pixel = 0.0;
  };
  Combined combined(const ImageTensor& candidate, double w_mid, double w_perc, double w_pix) const;

  /// Combined loss and its gradient with respect to the candidate image.
  std::pair<Combined, ImageTensor> combined_with_grad(const ImageTensor& candidate, double w_mid,
                                                      double w_perc, double w_pix) const;

  const ImageTensor& image() const { return target_; }
  int pixel_size() const { return pixel_size_; }

 private:
  ImageTensor target_;
  const oracle::FeatureExtractorOracle& feat_;
  int pixel_size_;
  oracle::FeatureMap mid_;
  std::vector<oracle::FeatureMap> layers_normalized_;
  ImageTensor down_;
};

struct Stage1Result {
  oracle::NoiseVector z;
  double loss = 0.0;
  double initial_loss = 0.0;          // at the CMA-ES initial mean
  std::vector<double> history;
};

/// CMA-ES over the noise vector with the mid-feature loss only.
Stage1Result stage1_optimize_noise(const ImageTensor& target, const oracle::InstanceFeature& h,
                                   const oracle::GeneratorOracle& gen,
                                   const oracle::FeatureExtractorOracle& feat,
                                   const InversionConfig& config);

struct Stage2Result {
  oracle::DenseVector d;  // lowest-loss iterate, the start included
  double loss = 0.0;
  gradopt::GradOptTrace trace;
};

/// RMSProp over the dense activation starting from dense_layer(z.head), with
/// h and z.tail fixed, on the weighted combination of all three losses.
Stage2Result stage2_optimize_dense(const ImageTensor& target, const oracle::InstanceFeature& h,
                                   const oracle::NoiseVector& z, const oracle::GeneratorOracle& gen,
                                   const oracle::FeatureExtractorOracle& feat,
                                   const InversionConfig& config);

std::vector<LatentTriple> extract_latents(const std::vector<ImageTensor>& images,
                                          const oracle::GeneratorOracle& gen,
                                          const oracle::FeatureExtractorOracle& feat,
                                          const InversionConfig& config);

/// Three LDM1 matrices (H.ldm, Z.ldm, D.ldm) plus meta.txt.
void save_latents(const std::filesystem::path& dir, const std::vector<LatentTriple>& latents,
                  const std::string& metadata);
std::vector<LatentTriple> load_latents(const std::filesystem::path& dir,
                                       const oracle::GeneratorSpec& spec);

}  // namespace latentdecode::inversion

#endif  // LATENTDECODE_INVERSION_HPP
