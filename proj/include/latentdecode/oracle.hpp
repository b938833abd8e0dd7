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

#ifndef LATENTDECODE_ORACLE_HPP
#define LATENTDECODE_ORACLE_HPP

#include <vector>

#include <Eigen/Core>

#include "latentdecode/dataio.hpp"

namespace latentdecode::oracle {

/// Latent topology of an instance-conditioned generator.
///
/// The noise vector is split into `levels` chunks of `level_dim` entries. The
/// first chunk (head) feeds the dense layer; the remaining chunks (tail)
/// condition the upsampling blocks together with the embedded instance
/// features.
struct GeneratorSpec {
  int h_dim = 64;
  int z_dim = 35;
  int levels = 7;
  int level_dim = 5;
  int embed_dim = 16;
  int dense_channels = 24;
  int dense_h = 2;
  int dense_w = 2;
  int image_size = 32;

  int dense_dim() const { return dense_channels * dense_h * dense_w; }
  int tail_dim() const { return z_dim - level_dim; }

  /// Full-size topology: 2048-dim instance features, 119 = 7 x 17 noise,
  /// 512-dim embedding, 1536x4x4 dense activation, 256x256 output.
  static GeneratorSpec full_scale();
  /// Reduced topology used for desk-scale runs.
  static GeneratorSpec toy();

  void validate() const;
};

using InstanceFeature = Eigen::VectorXd;
using DenseVector = Eigen::VectorXd;

/// Noise vector with its head/tail split.
class NoiseVector {
 public:
  NoiseVector() = default;
  NoiseVector(Eigen::VectorXd values, int level_dim);

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  int level_dim() const { return level_dim_; }

  Eigen::VectorXd head() const { return values_.head(level_dim_); }
  Eigen::VectorXd tail() const { return values_.tail(values_.size() - level_dim_); }

 private:
  Eigen::VectorXd values_;
  int level_dim_ = 0;
};

/// Channel-major (C x H x W) activation map.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  Eigen::VectorXd values;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w)
      : channels(c), height(h), width(w),
        values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c) * h * w)) {}

  Eigen::Index locations() const { return static_cast<Eigen::Index>(height) * width; }
  bool same_shape(const FeatureMap& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

class GeneratorOracle {
 public:
  virtual ~GeneratorOracle() = default;

  virtual const GeneratorSpec& spec() const = 0;

  /// First dense layer applied to the noise head.
  virtual DenseVector dense_layer(const Eigen::VectorXd& z_head) const = 0;

  /// Forward pass with the dense activation replaced by `d`.
  virtual ImageTensor generate_from_dense(const InstanceFeature& h, const Eigen::VectorXd& z_tail,
                                          const DenseVector& d) const = 0;

  /// Gradient of <generate_from_dense(h, z_tail, d), cogradient> with respect
  /// to d. Oracles without gradients throw Unsupported.
  virtual Eigen::VectorXd vjp_dense(const InstanceFeature& h, const Eigen::VectorXd& z_tail,
                                    const DenseVector& d, const ImageTensor& cogradient) const;

  virtual bool supports_vjp() const { return false; }

  /// Defined as generate_from_dense(h, z.tail, dense_layer(z.head)).
  ImageTensor generate(const InstanceFeature& h, const NoiseVector& z) const;

  NoiseVector make_noise(Eigen::VectorXd values) const {
    return NoiseVector(std::move(values), spec().level_dim);
  }
};

class FeatureExtractorOracle {
 public:
  virtual ~FeatureExtractorOracle() = default;

  virtual InstanceFeature instance_features(const ImageTensor& image) const = 0;

  /// Spatially structured intermediate representation (C x H x W, H,W > 1).
  virtual FeatureMap mid_features(const ImageTensor& image) const = 0;

  /// Layer stack for the perceptual distance, in a fixed order.
  virtual std::vector<FeatureMap> multi_layer_features(const ImageTensor& image) const = 0;

  virtual bool supports_vjp() const { return false; }

  /// Image-space gradient of <mid_features(image), cogradient>.
  virtual Eigen::VectorXd mid_features_vjp(const ImageTensor& image,
                                           const FeatureMap& cogradient) const;

  /// Image-space gradient of sum_l <multi_layer_features(image)[l], cogradients[l]>.
  virtual Eigen::VectorXd multi_layer_vjp(const ImageTensor& image,
                                          const std::vector<FeatureMap>& cogradients) const;
};

}  // namespace latentdecode::oracle

#endif  // LATENTDECODE_ORACLE_HPP
