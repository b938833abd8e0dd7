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

#ifndef LATENTDECODE_TOY_ORACLE_HPP
#define LATENTDECODE_TOY_ORACLE_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "latentdecode/oracle.hpp"

namespace latentdecode::oracle {

/// Architecture version of the toy networks. Bump when the wiring or the
/// weight draw changes; golden images are pinned to it.
inline constexpr int kToyArchitectureVersion = 1;

namespace detail {
struct ToyGeneratorNet;
struct ToyExtractorNet;
}  // namespace detail

/// Small seeded generator with the instance-conditioned wiring:
///   embed = W_e h + b_e
///   d     = tanh(W_d z_head + b_d)                reshaped to C x H x W
///   block k (one per tail level):
///     [nearest 2x upsample while below the output size]
///     a = (1 + tanh(G_k embed) / 2) * conv3x3(x) + S_k embed + b_k + N_k(z_level_k)
///     x <- a / 2 + tanh(a) / 2
///   image = sigmoid(conv1x1(x))
/// N_k mixes the level noise into fixed per-channel spatial patterns.
/// Weights are drawn once from the seed and never change.
class ToyGenerator final : public GeneratorOracle {
 public:
  ToyGenerator(const GeneratorSpec& spec, std::uint64_t seed);
  ~ToyGenerator() override;
  ToyGenerator(ToyGenerator&&) noexcept;

  const GeneratorSpec& spec() const override { return spec_; }
  DenseVector dense_layer(const Eigen::VectorXd& z_head) const override;
  ImageTensor generate_from_dense(const InstanceFeature& h, const Eigen::VectorXd& z_tail,
                                  const DenseVector& d) const override;
  Eigen::VectorXd vjp_dense(const InstanceFeature& h, const Eigen::VectorXd& z_tail,
                            const DenseVector& d, const ImageTensor& cogradient) const override;
  bool supports_vjp() const override { return true; }

  /// Affine part of the dense layer (before tanh). Exposed for tests.
  Eigen::VectorXd dense_preactivation(const Eigen::VectorXd& z_head) const;

  std::uint64_t seed() const { return seed_; }

 private:
  GeneratorSpec spec_;
  std::uint64_t seed_;
  std::unique_ptr<detail::ToyGeneratorNet> net_;
};

/// Three stride-2 conv layers with tanh; the middle layer is the
/// mid-feature map, all three form the perceptual stack, and instance
/// features are an affine map of the pooled deeper layers.
class ToyFeatureExtractor final : public FeatureExtractorOracle {
 public:
  ToyFeatureExtractor(int image_size, int h_dim, std::uint64_t seed);
  ~ToyFeatureExtractor() override;
  ToyFeatureExtractor(ToyFeatureExtractor&&) noexcept;

  InstanceFeature instance_features(const ImageTensor& image) const override;
  FeatureMap mid_features(const ImageTensor& image) const override;
  std::vector<FeatureMap> multi_layer_features(const ImageTensor& image) const override;

  bool supports_vjp() const override { return true; }
  Eigen::VectorXd mid_features_vjp(const ImageTensor& image,
                                   const FeatureMap& cogradient) const override;
  Eigen::VectorXd multi_layer_vjp(const ImageTensor& image,
                                  const std::vector<FeatureMap>& cogradients) const override;

  int image_size() const { return image_size_; }
  int h_dim() const { return h_dim_; }

 private:
  void check_image(const ImageTensor& image) const;

  int image_size_;
  int h_dim_;
  std::unique_ptr<detail::ToyExtractorNet> net_;
};

}  // namespace latentdecode::oracle

#endif  // LATENTDECODE_TOY_ORACLE_HPP
