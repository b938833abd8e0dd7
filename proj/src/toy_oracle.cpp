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

#include "latentdecode/toy_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "latentdecode/error.hpp"
#include "latentdecode/rng.hpp"

namespace latentdecode::oracle {

namespace detail {

namespace {

// Square kernel, zero padding of k/2, arbitrary stride.
struct Conv2d {
  int cin = 0;
  int cout = 0;
  int kernel = 1;
  int stride = 1;
  Eigen::MatrixXd weight;  // cout x (cin * kernel * kernel)
  Eigen::VectorXd bias;

  Conv2d() = default;
  Conv2d(int in, int out, int k, int s, double gain, Rng& rng)
      : cin(in), cout(out), kernel(k), stride(s) {
    const double scale = gain / std::sqrt(static_cast<double>(in * k * k));
    weight = rng.normal_matrix(out, in * k * k) * scale;
    bias = rng.normal_vector(out) * 0.1;
  }

  int out_size(int n) const { return (n + 2 * (kernel / 2) - kernel) / stride + 1; }

  Eigen::MatrixXd im2col(const FeatureMap& x) const {
    const int pad = kernel / 2;
    const int ho = out_size(x.height);
    const int wo = out_size(x.width);
    Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cin) * kernel * kernel,
                                                 static_cast<Eigen::Index>(ho) * wo);
    for (int c = 0; c < cin; ++c)
      for (int ky = 0; ky < kernel; ++ky)
        for (int kx = 0; kx < kernel; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(c) * kernel + ky) * kernel + kx;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= x.height) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= x.width) continue;
              cols(row, static_cast<Eigen::Index>(oy) * wo + ox) =
                  x.values[(static_cast<Eigen::Index>(c) * x.height + iy) * x.width + ix];
            }
          }
        }
    return cols;
  }

  // Linear part only: conv(x) + bias.
  FeatureMap forward(const FeatureMap& x) const {
    FeatureMap out(cout, out_size(x.height), out_size(x.width));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> o(
        out.values.data(), cout, out.locations());
    o.noalias() = weight * im2col(x);
    o.colwise() += bias;
    return out;
  }

  // Gradient with respect to the input, given the gradient of the output.
  FeatureMap backward_input(const FeatureMap& input_shape, const FeatureMap& g_out) const {
    const int pad = kernel / 2;
    const int ho = g_out.height;
    const int wo = g_out.width;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> g(
        g_out.values.data(), cout, g_out.locations());
    const Eigen::MatrixXd gcols = weight.transpose() * g;
    FeatureMap gin(cin, input_shape.height, input_shape.width);
    for (int c = 0; c < cin; ++c)
      for (int ky = 0; ky < kernel; ++ky)
        for (int kx = 0; kx < kernel; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(c) * kernel + ky) * kernel + kx;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= gin.height) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= gin.width) continue;
              gin.values[(static_cast<Eigen::Index>(c) * gin.height + iy) * gin.width + ix] +=
                  gcols(row, static_cast<Eigen::Index>(oy) * wo + ox);
            }
          }
        }
    return gin;
  }
};

FeatureMap upsample2x(const FeatureMap& x) {
  FeatureMap out(x.channels, x.height * 2, x.width * 2);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int xx = 0; xx < out.width; ++xx)
        out.values[(static_cast<Eigen::Index>(c) * out.height + y) * out.width + xx] =
            x.values[(static_cast<Eigen::Index>(c) * x.height + y / 2) * x.width + xx / 2];
  return out;
}

FeatureMap upsample2x_backward(const FeatureMap& g) {
  FeatureMap out(g.channels, g.height / 2, g.width / 2);
  for (int c = 0; c < g.channels; ++c)
    for (int y = 0; y < g.height; ++y)
      for (int xx = 0; xx < g.width; ++xx)
        out.values[(static_cast<Eigen::Index>(c) * out.height + y / 2) * out.width + xx / 2] +=
            g.values[(static_cast<Eigen::Index>(c) * g.height + y) * g.width + xx];
  return out;
}

void tanh_inplace(FeatureMap& x) { x.values = x.values.array().tanh(); }

// Non-saturating smooth activation: a/2 + tanh(a)/2, slope in [1/2, 1].
Eigen::ArrayXd soft_act(const Eigen::ArrayXd& a) { return 0.5 * a + 0.5 * a.tanh(); }
Eigen::ArrayXd soft_act_slope(const Eigen::ArrayXd& a) { return 1.0 - 0.5 * a.tanh().square(); }

// g <- g * (1 - y^2) where y = tanh(pre).
void tanh_backward(FeatureMap& g, const FeatureMap& y) {
  g.values.array() *= 1.0 - y.values.array().square();
}

}  // namespace

constexpr double kDenseGain = 1.5;
constexpr double kConvGain = 1.0;
constexpr double kEmbedGain = 0.3;
constexpr double kEmbedShift = 0.3;
constexpr double kNoiseShift = 0.2;
constexpr double kOutGain = 1.0;
constexpr double kNoiseLevelBoost = 1.8;

struct ToyGeneratorNet {
  struct Block {
    bool upsample = false;
    Conv2d conv;
    Eigen::MatrixXd gain_w;  // cout x embed_dim
    Eigen::MatrixXd embed_shift_w;  // cout x embed_dim
    Eigen::MatrixXd noise_shift_w;  // cout x level_dim
    Eigen::MatrixXd noise_maps;     // level_dim x output locations
    Eigen::VectorXd bias_b;
  };

  Eigen::MatrixXd embed_w;
  Eigen::VectorXd embed_b;
  Eigen::MatrixXd dense_w;
  Eigen::VectorXd dense_b;
  std::vector<Block> blocks;
  Conv2d to_rgb;

  // Per-block conditioning, evaluated once per forward pass.
  struct Modulation {
    Eigen::VectorXd gain;
    Eigen::VectorXd shift;
    Eigen::MatrixXd noise;  // cout x locations
  };

  struct Cache {
    std::vector<FeatureMap> block_inputs;   // after optional upsampling
    std::vector<Eigen::VectorXd> block_pre;  // modulated pre-activations
    std::vector<FeatureMap> block_outputs;
    std::vector<Modulation> mods;
    Eigen::VectorXd rgb;                    // sigmoid output, CHW
  };

  ToyGeneratorNet(const GeneratorSpec& s, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x6e65u));
    embed_w = rng.normal_matrix(s.embed_dim, s.h_dim) / std::sqrt(static_cast<double>(s.h_dim));
    embed_b = Eigen::VectorXd::Zero(s.embed_dim);
    dense_w = rng.normal_matrix(s.dense_dim(), s.level_dim) * (kDenseGain / std::sqrt(double(s.level_dim)));
    dense_b = rng.normal_vector(s.dense_dim()) * 0.3;

    const int ups = std::countr_zero(static_cast<unsigned>(s.image_size / s.dense_h));
    const int n_blocks = s.levels - 1;
    int channels = s.dense_channels;
    int res = s.dense_h;
    for (int k = 1; k <= n_blocks; ++k) {
      Block b;
      b.upsample = k > n_blocks - ups;
      const int out = std::max(8, s.dense_channels >> k);
      b.conv = Conv2d(channels, out, 3, 1, kConvGain, rng);
      b.gain_w = rng.normal_matrix(out, s.embed_dim) * (kEmbedGain / std::sqrt(double(s.embed_dim)));
      b.embed_shift_w = rng.normal_matrix(out, s.embed_dim) * (kEmbedShift / std::sqrt(double(s.embed_dim)));
      if (b.upsample) res *= 2;
      b.noise_shift_w = rng.normal_matrix(out, s.level_dim) *
                        (kNoiseShift * std::pow(kNoiseLevelBoost, n_blocks - k) /
                         std::sqrt(double(s.level_dim)));
      b.noise_maps = rng.normal_matrix(s.level_dim, static_cast<Eigen::Index>(res) * res);
      b.bias_b = rng.normal_vector(out) * 0.1;
      blocks.push_back(std::move(b));
      channels = out;
    }
    to_rgb = Conv2d(channels, 3, 1, 1, kOutGain, rng);
  }

  Modulation modulation(const Block& b, const Eigen::VectorXd& embed,
                        const Eigen::VectorXd& z_level) const {
    return {(0.5 * (b.gain_w * embed).array().tanh() + 1.0).matrix(),
            b.embed_shift_w * embed + b.bias_b,
            (b.noise_shift_w * z_level.asDiagonal() * b.noise_maps)};
  }

  void forward(const GeneratorSpec& s, const Eigen::VectorXd& h, const Eigen::VectorXd& z_tail,
               const Eigen::VectorXd& d, Cache& cache) const {
    const Eigen::VectorXd embed = embed_w * h + embed_b;
    FeatureMap x(s.dense_channels, s.dense_h, s.dense_w);
    x.values = d;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const Block& b = blocks[k];
      Modulation m = modulation(
          b, embed, z_tail.segment(static_cast<Eigen::Index>(k) * s.level_dim, s.level_dim));
      FeatureMap in = b.upsample ? upsample2x(x) : x;
      FeatureMap y = b.conv.forward(in);
      const Eigen::Index loc = y.locations();
      for (int c = 0; c < y.channels; ++c)
        y.values.segment(c * loc, loc) = (m.gain[c] * y.values.segment(c * loc, loc).array() +
                                          m.shift[c]).matrix() + m.noise.row(c).transpose();
      cache.block_pre.push_back(y.values);
      y.values = soft_act(y.values.array()).matrix();
      cache.block_inputs.push_back(std::move(in));
      cache.mods.push_back(std::move(m));
      cache.block_outputs.push_back(y);
      x = std::move(y);
    }
    FeatureMap rgb = to_rgb.forward(x);
    cache.rgb = (1.0 / (1.0 + (-rgb.values.array()).exp())).matrix();
  }

  ImageTensor to_image(const GeneratorSpec& s, const Eigen::VectorXd& chw) const {
    const int n = s.image_size;
    ImageTensor img(n, n);
    const Eigen::Index loc = static_cast<Eigen::Index>(n) * n;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) img.at(y, x, c) = chw[c * loc + y * n + x];
    return img;
  }

  Eigen::VectorXd backward_dense(const GeneratorSpec& s, const Cache& cache,
                                 const ImageTensor& cograd) const {
    const int n = s.image_size;
    const Eigen::Index loc = static_cast<Eigen::Index>(n) * n;
    FeatureMap g(3, n, n);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const double sig = cache.rgb[c * loc + y * n + x];
          g.values[c * loc + y * n + x] = cograd.at(y, x, c) * sig * (1.0 - sig);
        }
    g = to_rgb.backward_input(cache.block_outputs.back(), g);
    for (std::size_t k = blocks.size(); k-- > 0;) {
      const Block& b = blocks[k];
      g.values.array() *= soft_act_slope(cache.block_pre[k].array());
      const Eigen::Index bl = g.locations();
      for (int c = 0; c < g.channels; ++c) g.values.segment(c * bl, bl) *= cache.mods[k].gain[c];
      g = b.conv.backward_input(cache.block_inputs[k], g);
      if (b.upsample) g = upsample2x_backward(g);
    }
    return g.values;
  }
};

struct ToyExtractorNet {
  Conv2d conv1, conv2, conv3;
  Eigen::MatrixXd inst_w;
  Eigen::VectorXd inst_b;

  struct Cache {
    FeatureMap input, a1, a2, a3;
  };

  ToyExtractorNet(int h_dim, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x6665u));
    conv1 = Conv2d(3, 8, 3, 2, 1.5, rng);
    conv2 = Conv2d(8, 16, 3, 2, 1.5, rng);
    conv3 = Conv2d(16, 32, 3, 2, 1.5, rng);
    inst_w = rng.normal_matrix(h_dim, 48) * (2.0 / std::sqrt(48.0));
    inst_b = rng.normal_vector(h_dim) * 0.1;
  }

  static FeatureMap from_image(const ImageTensor& img) {
    FeatureMap x(3, img.height(), img.width());
    const Eigen::Index loc = x.locations();
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < img.height(); ++y)
        for (int xx = 0; xx < img.width(); ++xx)
          x.values[c * loc + static_cast<Eigen::Index>(y) * img.width() + xx] = img.at(y, xx, c);
    return x;
  }

  static Eigen::VectorXd to_image_layout(const FeatureMap& g) {
    Eigen::VectorXd out(g.values.size());
    const Eigen::Index loc = g.locations();
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
          out[(static_cast<Eigen::Index>(y) * g.width + x) * 3 + c] =
              g.values[c * loc + static_cast<Eigen::Index>(y) * g.width + x];
    return out;
  }

  Cache forward(const ImageTensor& img, int depth) const {
    Cache c;
    c.input = from_image(img);
    c.a1 = conv1.forward(c.input);
    tanh_inplace(c.a1);
    if (depth < 2) return c;
    c.a2 = conv2.forward(c.a1);
    tanh_inplace(c.a2);
    if (depth < 3) return c;
    c.a3 = conv3.forward(c.a2);
    tanh_inplace(c.a3);
    return c;
  }

  // Backward from cogradients on each layer's activation (empty = none).
  Eigen::VectorXd backward(const Cache& c, const FeatureMap* g1, const FeatureMap* g2,
                           const FeatureMap* g3) const {
    FeatureMap acc2(c.a2.channels, c.a2.height, c.a2.width);
    if (g3) {
      FeatureMap g = *g3;
      tanh_backward(g, c.a3);
      acc2 = conv3.backward_input(c.a2, g);
    }
    if (g2) acc2.values += g2->values;
    tanh_backward(acc2, c.a2);
    FeatureMap acc1 = conv2.backward_input(c.a1, acc2);
    if (g1) acc1.values += g1->values;
    tanh_backward(acc1, c.a1);
    return to_image_layout(conv1.backward_input(c.input, acc1));
  }
};

}  // namespace detail

// ---------------------------------------------------------------- generator

ToyGenerator::ToyGenerator(const GeneratorSpec& spec, std::uint64_t seed)
    : spec_(spec), seed_(seed) {
  spec_.validate();
  net_ = std::make_unique<detail::ToyGeneratorNet>(spec_, seed);
}

ToyGenerator::~ToyGenerator() = default;
ToyGenerator::ToyGenerator(ToyGenerator&&) noexcept = default;

Eigen::VectorXd ToyGenerator::dense_preactivation(const Eigen::VectorXd& z_head) const {
  require(z_head.size() == spec_.level_dim, ErrorCode::ShapeMismatch,
          "dense layer expects " + std::to_string(spec_.level_dim) + " inputs");
  return net_->dense_w * z_head + net_->dense_b;
}

DenseVector ToyGenerator::dense_layer(const Eigen::VectorXd& z_head) const {
  return dense_preactivation(z_head).array().tanh().matrix();
}

namespace {

void check_generator_inputs(const GeneratorSpec& s, const Eigen::VectorXd& h,
                            const Eigen::VectorXd& z_tail, const Eigen::VectorXd& d) {
  require(h.size() == s.h_dim, ErrorCode::ShapeMismatch, "instance feature has wrong length");
  require(z_tail.size() == s.tail_dim(), ErrorCode::ShapeMismatch, "noise tail has wrong length");
  require(d.size() == s.dense_dim(), ErrorCode::ShapeMismatch, "dense vector has wrong length");
  require(h.allFinite() && z_tail.allFinite() && d.allFinite(), ErrorCode::NonFinite,
          "generator input is not finite");
}

}  // namespace

ImageTensor ToyGenerator::generate_from_dense(const InstanceFeature& h,
                                              const Eigen::VectorXd& z_tail,
                                              const DenseVector& d) const {
  check_generator_inputs(spec_, h, z_tail, d);
  detail::ToyGeneratorNet::Cache cache;
  net_->forward(spec_, h, z_tail, d, cache);
  return net_->to_image(spec_, cache.rgb);
}

Eigen::VectorXd ToyGenerator::vjp_dense(const InstanceFeature& h, const Eigen::VectorXd& z_tail,
                                        const DenseVector& d, const ImageTensor& cogradient) const {
  check_generator_inputs(spec_, h, z_tail, d);
  require(cogradient.height() == spec_.image_size && cogradient.width() == spec_.image_size,
          ErrorCode::ShapeMismatch, "cogradient must match the output image shape");
  detail::ToyGeneratorNet::Cache cache;
  net_->forward(spec_, h, z_tail, d, cache);
  return net_->backward_dense(spec_, cache, cogradient);
}

// ---------------------------------------------------------------- extractor

ToyFeatureExtractor::ToyFeatureExtractor(int image_size, int h_dim, std::uint64_t seed)
    : image_size_(image_size), h_dim_(h_dim) {
  require(image_size >= 8 && h_dim > 0, ErrorCode::ConfigError,
          "toy extractor needs image_size >= 8 and h_dim > 0");
  net_ = std::make_unique<detail::ToyExtractorNet>(h_dim, mix_seed(seed, 1));
}

ToyFeatureExtractor::~ToyFeatureExtractor() = default;
ToyFeatureExtractor::ToyFeatureExtractor(ToyFeatureExtractor&&) noexcept = default;

void ToyFeatureExtractor::check_image(const ImageTensor& image) const {
  require(image.height() == image_size_ && image.width() == image_size_, ErrorCode::ShapeMismatch,
          "extractor expects " + std::to_string(image_size_) + "x" + std::to_string(image_size_) +
              " images");
}

InstanceFeature ToyFeatureExtractor::instance_features(const ImageTensor& image) const {
  check_image(image);
  const auto c = net_->forward(image, 3);
  Eigen::VectorXd pooled(48);
  for (int k = 0; k < 32; ++k) pooled[k] = c.a3.values.segment(k * c.a3.locations(), c.a3.locations()).mean();
  for (int k = 0; k < 16; ++k)
    pooled[32 + k] = c.a2.values.segment(k * c.a2.locations(), c.a2.locations()).mean();
  return net_->inst_w * pooled + net_->inst_b;
}

FeatureMap ToyFeatureExtractor::mid_features(const ImageTensor& image) const {
  check_image(image);
  return net_->forward(image, 2).a2;
}

std::vector<FeatureMap> ToyFeatureExtractor::multi_layer_features(const ImageTensor& image) const {
  check_image(image);
  auto c = net_->forward(image, 3);
  return {std::move(c.a1), std::move(c.a2), std::move(c.a3)};
}

Eigen::VectorXd ToyFeatureExtractor::mid_features_vjp(const ImageTensor& image,
                                                      const FeatureMap& cogradient) const {
  check_image(image);
  const auto c = net_->forward(image, 2);
  require(cogradient.same_shape(c.a2), ErrorCode::ShapeMismatch, "mid-feature cogradient shape");
  return net_->backward(c, nullptr, &cogradient, nullptr);
}

Eigen::VectorXd ToyFeatureExtractor::multi_layer_vjp(const ImageTensor& image,
                                                     const std::vector<FeatureMap>& cogradients) const {
  check_image(image);
  const auto c = net_->forward(image, 3);
  require(cogradients.size() == 3 && cogradients[0].same_shape(c.a1) &&
              cogradients[1].same_shape(c.a2) && cogradients[2].same_shape(c.a3),
          ErrorCode::ShapeMismatch, "multi-layer cogradient shapes");
  return net_->backward(c, &cogradients[0], &cogradients[1], &cogradients[2]);
}

}  // namespace latentdecode::oracle
