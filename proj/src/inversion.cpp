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

#include "latentdecode/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "latentdecode/dataio.hpp"
#include "latentdecode/error.hpp"
#include "latentdecode/parallel.hpp"

namespace latentdecode::inversion {

using oracle::FeatureMap;

namespace {

// Unit-normalizes the channel vector at each location. Zero vectors stay zero.
FeatureMap normalize_locations(const FeatureMap& f, Eigen::VectorXd* norms = nullptr) {
  FeatureMap out = f;
  const Eigen::Index loc = f.locations();
  if (norms) norms->resize(loc);
  for (Eigen::Index p = 0; p < loc; ++p) {
    double sq = 0.0;
    for (int c = 0; c < f.channels; ++c) sq += f.values[c * loc + p] * f.values[c * loc + p];
    const double n = std::sqrt(sq);
    if (norms) (*norms)[p] = n;
    for (int c = 0; c < f.channels; ++c) out.values[c * loc + p] = n > 0.0 ? f.values[c * loc + p] / n : 0.0;
  }
  return out;
}

double normalized_layer_distance(const FeatureMap& na, const FeatureMap& nb) {
  require(na.same_shape(nb), ErrorCode::ShapeMismatch, "feature layer shapes differ");
  return (na.values - nb.values).squaredNorm() / static_cast<double>(na.locations());
}

// 1-D area-averaging weights mapping n input samples onto m outputs.
Eigen::MatrixXd area_weights(int n, int m) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, n);
  const double ratio = static_cast<double>(n) / m;
  for (int i = 0; i < m; ++i) {
    const double lo = i * ratio;
    const double hi = (i + 1) * ratio;
    for (int j = static_cast<int>(std::floor(lo)); j < n && j < hi; ++j) {
      const double overlap = std::min<double>(hi, j + 1) - std::max<double>(lo, j);
      if (overlap > 0.0) r(i, j) = overlap / ratio;
    }
  }
  return r;
}

Eigen::MatrixXd plane(const ImageTensor& img, int c) {
  Eigen::MatrixXd p(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) p(y, x) = img.at(y, x, c);
  return p;
}

ImageTensor resample(const ImageTensor& img, const Eigen::MatrixXd& ry, const Eigen::MatrixXd& rx) {
  ImageTensor out(static_cast<int>(ry.rows()), static_cast<int>(rx.rows()));
  for (int c = 0; c < 3; ++c) {
    const Eigen::MatrixXd p = ry * plane(img, c) * rx.transpose();
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) out.at(y, x, c) = p(y, x);
  }
  return out;
}

void check_size(const ImageTensor& img, int size) {
  require(size >= 1 && size <= std::min(img.height(), img.width()), ErrorCode::ShapeMismatch,
          "downsample size " + std::to_string(size) + " exceeds image size");
}

FeatureMap as_map(const FeatureMap& like, Eigen::VectorXd values) {
  FeatureMap m = like;
  m.values = std::move(values);
  return m;
}

}  // namespace

void InversionConfig::validate() const {
  stage2.validate();
  require(w_mid >= 0.0 && w_perc >= 0.0 && w_pix >= 0.0, ErrorCode::ConfigError,
          "loss weights must be nonnegative");
  require(w_mid > 0.0 || w_perc > 0.0 || w_pix > 0.0, ErrorCode::ConfigError,
          "at least one loss weight must be positive");
  require(pixel_downsample >= 1, ErrorCode::ConfigError, "pixel_downsample must be >= 1");
  require(fd_step > 0.0, ErrorCode::ConfigError, "fd_step must be positive");
}

double mid_feature_loss(const ImageTensor& candidate, const ImageTensor& target,
                        const oracle::FeatureExtractorOracle& feat) {
  require_same_shape(candidate, target);
  const FeatureMap a = feat.mid_features(candidate);
  const FeatureMap b = feat.mid_features(target);
  require(a.same_shape(b), ErrorCode::ShapeMismatch, "mid-feature shapes differ");
  return (a.values - b.values).squaredNorm() / static_cast<double>(a.values.size());
}

double perceptual_distance(const ImageTensor& a, const ImageTensor& b,
                           const oracle::FeatureExtractorOracle& feat) {
  require_same_shape(a, b);
  const auto la = feat.multi_layer_features(a);
  const auto lb = feat.multi_layer_features(b);
  require(la.size() == lb.size() && !la.empty(), ErrorCode::ShapeMismatch, "layer stacks differ");
  double total = 0.0;
  for (std::size_t l = 0; l < la.size(); ++l)
    total += normalized_layer_distance(normalize_locations(la[l]), normalize_locations(lb[l]));
  return total / static_cast<double>(la.size());
}

ImageTensor area_downsample(const ImageTensor& image, int size) {
  check_size(image, size);
  return resample(image, area_weights(image.height(), size), area_weights(image.width(), size));
}

double pixel_mse_down(const ImageTensor& a, const ImageTensor& b, int size) {
  require_same_shape(a, b);
  const ImageTensor da = area_downsample(a, size);
  const ImageTensor db = area_downsample(b, size);
  return (da.values() - db.values()).squaredNorm() / static_cast<double>(da.size());
}

// ------------------------------------------------------------------ LossTarget

LossTarget::LossTarget(const ImageTensor& target, const oracle::FeatureExtractorOracle& feat,
                       int pixel_size)
    : target_(target),
      feat_(feat),
      pixel_size_(std::min({pixel_size, target.height(), target.width()})),
      mid_(feat.mid_features(target)),
      down_(area_downsample(target, pixel_size_)) {
  for (const auto& layer : feat.multi_layer_features(target))
    layers_normalized_.push_back(normalize_locations(layer));
}

double LossTarget::mid(const ImageTensor& candidate) const {
  require_same_shape(candidate, target_);
  const FeatureMap a = feat_.mid_features(candidate);
  return (a.values - mid_.values).squaredNorm() / static_cast<double>(a.values.size());
}

LossTarget::Combined LossTarget::combined(const ImageTensor& candidate, double w_mid, double w_perc,
                                          double w_pix) const {
  require_same_shape(candidate, target_);
  Combined c;
  if (w_mid > 0.0) c.mid = mid(candidate);
  if (w_perc > 0.0) {
    const auto layers = feat_.multi_layer_features(candidate);
    for (std::size_t l = 0; l < layers.size(); ++l)
      c.perceptual += normalized_layer_distance(normalize_locations(layers[l]), layers_normalized_[l]);
    c.perceptual /= static_cast<double>(layers.size());
  }
  if (w_pix > 0.0) {
    const ImageTensor d = area_downsample(candidate, pixel_size_);
    c.pixel = (d.values() - down_.values()).squaredNorm() / static_cast<double>(d.size());
  }
  c.total = w_mid * c.mid + w_perc * c.perceptual + w_pix * c.pixel;
  return c;
}

std::pair<LossTarget::Combined, ImageTensor> LossTarget::combined_with_grad(
    const ImageTensor& candidate, double w_mid, double w_perc, double w_pix) const {
  require_same_shape(candidate, target_);
  Combined c;
  ImageTensor grad(candidate.height(), candidate.width());

  if (w_mid > 0.0) {
    const FeatureMap a = feat_.mid_features(candidate);
    const Eigen::VectorXd diff = a.values - mid_.values;
    const double n = static_cast<double>(diff.size());
    c.mid = diff.squaredNorm() / n;
    grad.values() += feat_.mid_features_vjp(candidate, as_map(a, (2.0 * w_mid / n) * diff));
  }

  if (w_perc > 0.0) {
    const auto layers = feat_.multi_layer_features(candidate);
    const double n_layers = static_cast<double>(layers.size());
    std::vector<FeatureMap> cograds;
    cograds.reserve(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Eigen::VectorXd norms;
      const FeatureMap na = normalize_locations(layers[l], &norms);
      const FeatureMap& nb = layers_normalized_[l];
      const Eigen::Index loc = na.locations();
      c.perceptual += normalized_layer_distance(na, nb);
      // d/d f of |f/|f| - nb|^2 = (g - n (n.g)) / |f| with g = 2 (n - nb).
      FeatureMap g = as_map(na, Eigen::VectorXd::Zero(na.values.size()));
      const double scale = 2.0 * w_perc / (n_layers * static_cast<double>(loc));
      for (Eigen::Index p = 0; p < loc; ++p) {
        if (!(norms[p] > 0.0)) continue;
        double dot = 0.0;
        for (int ch = 0; ch < na.channels; ++ch) {
          const double gn = scale * (na.values[ch * loc + p] - nb.values[ch * loc + p]);
          dot += gn * na.values[ch * loc + p];
        }
        for (int ch = 0; ch < na.channels; ++ch) {
          const double gn = scale * (na.values[ch * loc + p] - nb.values[ch * loc + p]);
          g.values[ch * loc + p] = (gn - na.values[ch * loc + p] * dot) / norms[p];
        }
      }
      cograds.push_back(std::move(g));
    }
    c.perceptual /= n_layers;
    grad.values() += feat_.multi_layer_vjp(candidate, cograds);
  }

  if (w_pix > 0.0) {
    const Eigen::MatrixXd ry = area_weights(candidate.height(), pixel_size_);
    const Eigen::MatrixXd rx = area_weights(candidate.width(), pixel_size_);
    const ImageTensor d = resample(candidate, ry, rx);
    const Eigen::VectorXd diff = d.values() - down_.values();
    const double n = static_cast<double>(diff.size());
    c.pixel = diff.squaredNorm() / n;
    const ImageTensor g_down(d.height(), d.width(), (2.0 * w_pix / n) * diff);
    for (int ch = 0; ch < 3; ++ch) {
      const Eigen::MatrixXd up = ry.transpose() * plane(g_down, ch) * rx;
      for (int y = 0; y < grad.height(); ++y)
        for (int x = 0; x < grad.width(); ++x) grad.at(y, x, ch) += up(y, x);
    }
  }

  c.total = w_mid * c.mid + w_perc * c.perceptual + w_pix * c.pixel;
  return {c, std::move(grad)};
}

// ------------------------------------------------------------------ stages

Stage1Result stage1_optimize_noise(const ImageTensor& target, const oracle::InstanceFeature& h,
                                   const oracle::GeneratorOracle& gen,
                                   const oracle::FeatureExtractorOracle& feat,
                                   const InversionConfig& config) {
  const auto& spec = gen.spec();
  cmaes::CmaesConfig cc = config.cmaes;
  cc.dim = spec.z_dim;
  if (cc.mean0.size() == 0) cc.mean0 = Eigen::VectorXd::Zero(spec.z_dim);
  const LossTarget loss(target, feat, config.pixel_downsample);

  auto objective = [&](const Eigen::VectorXd& z) {
    const double v = loss.mid(gen.generate(h, gen.make_noise(z)));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  Stage1Result r;
  r.initial_loss = objective(cc.resolved().mean0);
  const cmaes::CmaesResult res = cmaes::minimize(objective, cc);
  r.z = gen.make_noise(res.x_best);
  r.loss = res.f_best;
  r.history = res.history;
  return r;
}

Stage2Result stage2_optimize_dense(const ImageTensor& target, const oracle::InstanceFeature& h,
                                   const oracle::NoiseVector& z, const oracle::GeneratorOracle& gen,
                                   const oracle::FeatureExtractorOracle& feat,
                                   const InversionConfig& config) {
  config.validate();
  const auto& spec = gen.spec();
  require(z.size() == spec.z_dim, ErrorCode::ShapeMismatch, "noise vector has wrong length");
  const Eigen::VectorXd z_tail = z.tail();
  const LossTarget loss(target, feat, config.pixel_downsample);
  const double wm = config.w_mid, wp = config.w_perc, wx = config.w_pix;

  auto scalar = [&](const Eigen::VectorXd& d) {
    return loss.combined(gen.generate_from_dense(h, z_tail, d), wm, wp, wx).total;
  };

  bool analytic = gen.supports_vjp() && feat.supports_vjp();
  if (!analytic && spec.dense_dim() > 512)
    fail(ErrorCode::GradientUnavailable,
         "oracle gradients unavailable and dense dimension " + std::to_string(spec.dense_dim()) +
             " is too large for finite differences");

  gradopt::LossAndGrad loss_and_grad = [&](const Eigen::VectorXd& d) {
    const ImageTensor img = gen.generate_from_dense(h, z_tail, d);
    if (analytic) {
      try {
        auto [c, g_img] = loss.combined_with_grad(img, wm, wp, wx);
        return std::pair{c.total, gen.vjp_dense(h, z_tail, d, g_img)};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Unsupported) throw;
        if (spec.dense_dim() > 512)
          fail(ErrorCode::GradientUnavailable, "oracle declined gradients: " + e.detail());
        analytic = false;
      }
    }
    return std::pair{loss.combined(img, wm, wp, wx).total,
                     gradopt::finite_diff_grad(scalar, d, config.fd_step)};
  };

  // RMSProp is not monotone; keep the lowest-loss iterate seen.
  Eigen::VectorXd best_d;
  double best_loss = std::numeric_limits<double>::infinity();
  gradopt::LossAndGrad tracked = [&](const Eigen::VectorXd& d) {
    auto out = loss_and_grad(d);
    if (out.first < best_loss) {
      best_loss = out.first;
      best_d = d;
    }
    return out;
  };

  Stage2Result r;
  r.trace = gradopt::minimize_grad(tracked, gen.dense_layer(z.head()), config.stage2);
  r.d = best_d;
  r.loss = best_loss;
  return r;
}

std::vector<LatentTriple> extract_latents(const std::vector<ImageTensor>& images,
                                          const oracle::GeneratorOracle& gen,
                                          const oracle::FeatureExtractorOracle& feat,
                                          const InversionConfig& config) {
  require(!images.empty(), ErrorCode::EmptyInput, "no images to invert");
  config.validate();
  std::vector<LatentTriple> out(images.size());
  parallel_for(images.size(), config.threads, [&](std::size_t i) {
    LatentTriple& t = out[i];
    t.h = feat.instance_features(images[i]);
    Stage1Result s1 = stage1_optimize_noise(images[i], t.h, gen, feat, config);
    t.z = s1.z;
    t.stage1_loss = s1.loss;
    Stage2Result s2 = stage2_optimize_dense(images[i], t.h, t.z, gen, feat, config);
    t.d = s2.d;
    t.stage2_loss = s2.loss;
  });
  return out;
}

void save_latents(const std::filesystem::path& dir, const std::vector<LatentTriple>& latents,
                  const std::string& metadata) {
  require(!latents.empty(), ErrorCode::EmptyInput, "no latents to save");
  std::filesystem::create_directories(dir);
  const auto n = static_cast<Eigen::Index>(latents.size());
  Eigen::MatrixXd h(n, latents[0].h.size()), z(n, latents[0].z.size()), d(n, latents[0].d.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = latents[static_cast<std::size_t>(i)];
    h.row(i) = t.h.transpose();
    z.row(i) = t.z.values().transpose();
    d.row(i) = t.d.transpose();
  }
  write_matrix_d(dir / "H.ldm", h);
  write_matrix_d(dir / "Z.ldm", z);
  write_matrix_d(dir / "D.ldm", d);
  std::ofstream meta(dir / "meta.txt", std::ios::trunc);
  if (!meta) fail(ErrorCode::IoFailure, "cannot write latent metadata");
  meta << metadata;
}

std::vector<LatentTriple> load_latents(const std::filesystem::path& dir,
                                       const oracle::GeneratorSpec& spec) {
  for (const char* f : {"H.ldm", "Z.ldm", "D.ldm"})
    if (!std::filesystem::exists(dir / f))
      fail(ErrorCode::UpstreamMissing, (dir / f).string() + " not found");
  const Eigen::MatrixXd h = read_matrix_d(dir / "H.ldm");
  const Eigen::MatrixXd z = read_matrix_d(dir / "Z.ldm");
  const Eigen::MatrixXd d = read_matrix_d(dir / "D.ldm");
  require(h.rows() == z.rows() && h.rows() == d.rows(), ErrorCode::ShapeMismatch,
          "latent matrices have different row counts");
  require(h.cols() == spec.h_dim && z.cols() == spec.z_dim && d.cols() == spec.dense_dim(),
          ErrorCode::ShapeMismatch, "latent matrices do not match the generator topology");
  std::vector<LatentTriple> out(static_cast<std::size_t>(h.rows()));
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    auto& t = out[static_cast<std::size_t>(i)];
    t.h = h.row(i).transpose();
    t.z = oracle::NoiseVector(z.row(i).transpose(), spec.level_dim);
    t.d = d.row(i).transpose();
  }
  return out;
}

}  // namespace latentdecode::inversion
