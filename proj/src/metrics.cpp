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

#include "latentdecode/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "latentdecode/error.hpp"

namespace latentdecode::metrics {

double pixel_correlation(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b);
  const Eigen::ArrayXd x = a.values().array() - a.values().mean();
  const Eigen::ArrayXd y = b.values().array() - b.values().mean();
  const double sxx = x.square().sum();
  const double syy = y.square().sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorCode::ZeroVariance, "image has zero pixel variance");
  return (x * y).sum() / std::sqrt(sxx * syy);
}

double two_way_identification(const Eigen::MatrixXd& sim) {
  require(sim.rows() == sim.cols(), ErrorCode::ShapeMismatch, "similarity matrix must be square");
  const Eigen::Index n = sim.rows();
  if (n < 2) fail(ErrorCode::TooFewItems, "two-way identification needs at least two items");
  double score = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (sim(i, i) > sim(i, j))
        score += 1.0;
      else if (sim(i, i) == sim(i, j))
        score += 0.5;
    }
  return 100.0 * score / static_cast<double>(n * (n - 1));
}

double two_way_identification(const std::vector<ImageTensor>& recons,
                              const std::vector<ImageTensor>& truths, const Similarity& similarity) {
  require(recons.size() == truths.size(), ErrorCode::LengthMismatch,
          "reconstruction and truth counts differ");
  if (recons.size() < 2) fail(ErrorCode::TooFewItems, "two-way identification needs at least two items");
  const auto n = static_cast<Eigen::Index>(recons.size());
  Eigen::MatrixXd sim(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      sim(i, j) = similarity(recons[static_cast<std::size_t>(i)], truths[static_cast<std::size_t>(j)]);
  return two_way_identification(sim);
}

namespace {

Eigen::VectorXd gaussian_taps(int window, double sigma) {
  Eigen::VectorXd taps(window);
  const double center = (window - 1) / 2.0;
  for (int i = 0; i < window; ++i) {
    const double t = (i - center) / sigma;
    taps[i] = std::exp(-0.5 * t * t);
  }
  return taps / taps.sum();
}

// Separable 'valid' filtering of one channel plane (rows x cols).
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& plane, const Eigen::VectorXd& taps) {
  const Eigen::Index w = taps.size();
  const Eigen::Index rows = plane.rows() - w + 1;
  const Eigen::Index cols = plane.cols() - w + 1;
  Eigen::MatrixXd horiz(plane.rows(), cols);
  for (Eigen::Index c = 0; c < cols; ++c) horiz.col(c) = plane.middleCols(c, w) * taps;
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) out.row(r) = taps.transpose() * horiz.middleRows(r, w);
  return out;
}

Eigen::MatrixXd channel_plane(const ImageTensor& img, int c) {
  Eigen::MatrixXd p(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) p(y, x) = img.at(y, x, c);
  return p;
}

}  // namespace

double ssim(const ImageTensor& a, const ImageTensor& b, const SsimParams& params) {
  require_same_shape(a, b);
  if (std::min(a.height(), a.width()) < params.window)
    fail(ErrorCode::ImageTooSmall, "SSIM needs images at least " + std::to_string(params.window) +
                                       " pixels on each side");
  const Eigen::VectorXd taps = gaussian_taps(params.window, params.sigma);
  const double c1 = std::pow(params.k1 * params.data_range, 2);
  const double c2 = std::pow(params.k2 * params.data_range, 2);
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const Eigen::MatrixXd x = channel_plane(a, c);
    const Eigen::MatrixXd y = channel_plane(b, c);
    const Eigen::ArrayXXd mx = filter_valid(x, taps).array();
    const Eigen::ArrayXXd my = filter_valid(y, taps).array();
    const Eigen::ArrayXXd vx = filter_valid(x.cwiseProduct(x), taps).array() - mx.square();
    const Eigen::ArrayXXd vy = filter_valid(y.cwiseProduct(y), taps).array() - my.square();
    const Eigen::ArrayXXd cxy = filter_valid(x.cwiseProduct(y), taps).array() - mx * my;
    const Eigen::ArrayXXd map = ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
                                ((mx.square() + my.square() + c1) * (vx + vy + c2));
    total += map.mean();
  }
  return total / a.channels();
}

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch, "feature vectors differ in length");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) fail(ErrorCode::ZeroNorm, "feature vector has zero norm");
  const double cosine = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return 1.0 - cosine;
}

double feature_distance(const ImageTensor& a, const ImageTensor& b,
                        const oracle::FeatureExtractorOracle& feat) {
  require_same_shape(a, b);
  return cosine_distance(feat.instance_features(a), feat.instance_features(b));
}

MetricReport evaluate(const std::vector<ImageTensor>& recons, const std::vector<ImageTensor>& truths,
                      const oracle::FeatureExtractorOracle& feat) {
  require(recons.size() == truths.size(), ErrorCode::LengthMismatch,
          "reconstruction and truth counts differ");
  MetricReport r;
  const auto n = static_cast<Eigen::Index>(recons.size());
  Eigen::MatrixXd sim(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      sim(i, j) = pixel_correlation(recons[static_cast<std::size_t>(i)],
                                    truths[static_cast<std::size_t>(j)]);
  r.pix_comp = two_way_identification(sim);
  for (std::size_t i = 0; i < recons.size(); ++i) {
    r.pixel_correlation_items.push_back(sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    r.ssim_items.push_back(ssim(recons[i], truths[i]));
    r.feature_distance_items.push_back(feature_distance(recons[i], truths[i], feat));
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  r.ssim_mean = mean(r.ssim_items);
  r.feature_distance_mean = mean(r.feature_distance_items);
  return r;
}

}  // namespace latentdecode::metrics
