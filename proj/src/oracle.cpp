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

#include "latentdecode/oracle.hpp"

#include <bit>

#include "latentdecode/error.hpp"

namespace latentdecode::oracle {

GeneratorSpec GeneratorSpec::full_scale() {
  GeneratorSpec s;
  s.h_dim = 2048;
  s.z_dim = 119;
  s.levels = 7;
  s.level_dim = 17;
  s.embed_dim = 512;
  s.dense_channels = 1536;
  s.dense_h = 4;
  s.dense_w = 4;
  s.image_size = 256;
  return s;
}

GeneratorSpec GeneratorSpec::toy() { return GeneratorSpec{}; }

void GeneratorSpec::validate() const {
  require(h_dim > 0 && embed_dim > 0 && levels >= 2 && level_dim > 0, ErrorCode::ConfigError,
          "generator dimensions must be positive with at least two levels");
  require(z_dim == levels * level_dim, ErrorCode::ConfigError,
          "z_dim must equal levels * level_dim");
  require(dense_channels > 0 && dense_h > 0 && dense_w > 0, ErrorCode::ConfigError,
          "dense dimensions must be positive");
  require(image_size > 0 && image_size <= 256, ErrorCode::ConfigError,
          "image_size must be in (0, 256]");
  require(dense_h == dense_w, ErrorCode::ConfigError, "dense activation must be square");
  require(image_size % dense_h == 0 && std::has_single_bit(static_cast<unsigned>(image_size / dense_h)),
          ErrorCode::ConfigError, "image_size must be dense_h times a power of two");
  const int ups = std::countr_zero(static_cast<unsigned>(image_size / dense_h));
  require(ups <= levels - 1, ErrorCode::ConfigError,
          "not enough generator levels to reach image_size");
}

NoiseVector::NoiseVector(Eigen::VectorXd values, int level_dim)
    : values_(std::move(values)), level_dim_(level_dim) {
  require(level_dim > 0 && values_.size() >= level_dim, ErrorCode::ShapeMismatch,
          "noise vector shorter than one level");
}

Eigen::VectorXd GeneratorOracle::vjp_dense(const InstanceFeature&, const Eigen::VectorXd&,
                                           const DenseVector&, const ImageTensor&) const {
  fail(ErrorCode::Unsupported, "generator oracle does not provide gradients");
}

ImageTensor GeneratorOracle::generate(const InstanceFeature& h, const NoiseVector& z) const {
  require(z.size() == spec().z_dim, ErrorCode::ShapeMismatch,
          "noise vector has " + std::to_string(z.size()) + " entries, expected " +
              std::to_string(spec().z_dim));
  return generate_from_dense(h, z.tail(), dense_layer(z.head()));
}

Eigen::VectorXd FeatureExtractorOracle::mid_features_vjp(const ImageTensor&,
                                                         const FeatureMap&) const {
  fail(ErrorCode::Unsupported, "feature extractor does not provide gradients");
}

Eigen::VectorXd FeatureExtractorOracle::multi_layer_vjp(const ImageTensor&,
                                                        const std::vector<FeatureMap>&) const {
  fail(ErrorCode::Unsupported, "feature extractor does not provide gradients");
}

}  // namespace latentdecode::oracle
