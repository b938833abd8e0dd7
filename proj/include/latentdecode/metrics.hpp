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

#ifndef LATENTDECODE_METRICS_HPP
#define LATENTDECODE_METRICS_HPP

#include <functional>
#include <string>
#include <vector>

#include "latentdecode/dataio.hpp"
#include "latentdecode/oracle.hpp"

namespace latentdecode::metrics {

/// Pearson correlation over all flattened pixel values, channels included.
double pixel_correlation(const ImageTensor& a, const ImageTensor& b);

using Similarity = std::function<double(const ImageTensor&, const ImageTensor&)>;

/// Percentage of ordered (i, j != i) pairs where recon_i is more similar to
/// truth_i than to truth_j. Ties score one half.
double two_way_identification(const std::vector<ImageTensor>& recons,
                              const std::vector<ImageTensor>& truths, const Similarity& similarity);

/// Same protocol on a precomputed matrix sim(i, j) = similarity(recon_i, truth_j).
double two_way_identification(const Eigen::MatrixXd& similarity);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Gaussian-windowed SSIM evaluated at every position where the window fits
/// inside the image, averaged over positions and channels.
double ssim(const ImageTensor& a, const ImageTensor& b, const SsimParams& params = {});

/// 1 - cosine similarity of the oracle's instance features.
double feature_distance(const ImageTensor& a, const ImageTensor& b,
                        const oracle::FeatureExtractorOracle& feat);

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct MetricReport {
  double pix_comp = 0.0;
  double ssim_mean = 0.0;
  double feature_distance_mean = 0.0;
  std::vector<double> ssim_items;
  std::vector<double> feature_distance_items;
  std::vector<double> pixel_correlation_items;  // recon_i vs truth_i
};

MetricReport evaluate(const std::vector<ImageTensor>& recons, const std::vector<ImageTensor>& truths,
                      const oracle::FeatureExtractorOracle& feat);

}  // namespace latentdecode::metrics

#endif  // LATENTDECODE_METRICS_HPP
