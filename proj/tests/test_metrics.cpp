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

#include <doctest.h>

#include <cmath>

#include "latentdecode/metrics.hpp"
#include "latentdecode/rng.hpp"
#include "testing.hpp"

using namespace latentdecode;
using namespace latentdecode::metrics;
using latentdecode::testing::code_of;

namespace {

enum class Pattern { Sine, Cosine, Modular };

// Reference values below were computed with scikit-image's
// structural_similarity (gaussian_weights, sigma 1.5, population covariance,
// data_range 1) on the same formulas.
ImageTensor pattern(Pattern p, int h, int w) {
  ImageTensor img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = 0.0;
        switch (p) {
          case Pattern::Sine: v = 0.5 + 0.4 * std::sin(0.3 * x + 0.2 * y + c); break;
          case Pattern::Cosine: v = 0.5 + 0.35 * std::cos(0.25 * x - 0.15 * y + 0.5 * c); break;
          case Pattern::Modular: v = ((7 * x + 13 * y + 5 * c) % 17) / 16.0; break;
        }
        img.at(y, x, c) = v;
      }
  return img;
}

ImageTensor random_image(Rng& rng, int h, int w) {
  ImageTensor img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.values()[i] = rng.uniform();
  return img;
}

// Instance features are the mean of one channel placed on that channel's axis.
class AxisFeatures final : public oracle::FeatureExtractorOracle {
 public:
  oracle::InstanceFeature instance_features(const ImageTensor& img) const override {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(3);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        for (int c = 0; c < 3; ++c) f[c] += img.at(y, x, c);
    return f;
  }
  oracle::FeatureMap mid_features(const ImageTensor&) const override { return {}; }
  std::vector<oracle::FeatureMap> multi_layer_features(const ImageTensor&) const override { return {}; }
};

ImageTensor channel_image(int c, double v) {
  ImageTensor img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(y, x, c) = v;
  return img;
}

}  // namespace

TEST_CASE("pixel correlation") {
  Rng rng(1);
  const ImageTensor a = random_image(rng, 4, 4);
  CHECK(pixel_correlation(a, a) == doctest::Approx(1.0).epsilon(1e-14));
  ImageTensor inv = a;
  inv.values() = 1.0 - a.values().array();
  CHECK(pixel_correlation(a, inv) == doctest::Approx(-1.0).epsilon(1e-14));

  const ImageTensor b = random_image(rng, 4, 4);
  const auto n = static_cast<double>(a.size());
  const double ma = a.values().sum() / n, mb = b.values().sum() / n;
  double sab = 0, saa = 0, sbb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    sab += (a.values()[i] - ma) * (b.values()[i] - mb);
    saa += (a.values()[i] - ma) * (a.values()[i] - ma);
    sbb += (b.values()[i] - mb) * (b.values()[i] - mb);
  }
  CHECK(std::abs(pixel_correlation(a, b) - sab / std::sqrt(saa * sbb)) < 1e-12);

  ImageTensor scaled = b;
  scaled.values() = 0.25 * b.values().array() + 0.1;
  CHECK(std::abs(pixel_correlation(a, scaled) - pixel_correlation(a, b)) < 1e-12);

  CHECK(code_of([&] { pixel_correlation(a, ImageTensor(4, 4)); }) == ErrorCode::ZeroVariance);
  CHECK(code_of([&] { pixel_correlation(a, ImageTensor(4, 5)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("two-way identification protocol") {
  Rng rng(2);
  std::vector<ImageTensor> truths;
  for (int i = 0; i < 6; ++i) truths.push_back(random_image(rng, 8, 8));
  CHECK(two_way_identification(truths, truths, pixel_correlation) == 100.0);

  const std::vector<ImageTensor> swapped{truths[1], truths[0]};
  const std::vector<ImageTensor> pair{truths[0], truths[1]};
  CHECK(two_way_identification(swapped, pair, pixel_correlation) == 0.0);

  Eigen::MatrixXd ties = Eigen::MatrixXd::Constant(3, 3, 0.2);
  CHECK(two_way_identification(ties) == 50.0);

  CHECK(code_of([&] { two_way_identification({truths[0]}, {truths[0]}, pixel_correlation); }) ==
        ErrorCode::TooFewItems);
  CHECK(code_of([&] { two_way_identification(Eigen::MatrixXd::Zero(2, 3)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("two-way identification is rank based") {
  Rng rng(3);
  Eigen::MatrixXd s(20, 20);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform();
  const Eigen::MatrixXd t = (3.0 * s.array()).exp() - 4.0;
  CHECK(two_way_identification(s) == two_way_identification(t));
}

TEST_CASE("two-way identification of independent items is near chance") {
  Rng rng(4);
  std::vector<ImageTensor> recons, truths;
  for (int i = 0; i < 200; ++i) {
    recons.push_back(random_image(rng, 6, 6));
    truths.push_back(random_image(rng, 6, 6));
  }
  const double acc = two_way_identification(recons, truths, pixel_correlation);
  CHECK(acc > 45.0);
  CHECK(acc < 55.0);
}

TEST_CASE("ssim matches reference values") {
  struct Case {
    Pattern a, b;
    int h, w;
    double expected;
  };
  const Case cases[] = {
      {Pattern::Sine, Pattern::Cosine, 24, 24, -0.018358920984917263},
      {Pattern::Sine, Pattern::Modular, 16, 20, 0.006591942041311202},
      {Pattern::Cosine, Pattern::Modular, 11, 11, -0.0028566956970670332},
  };
  for (const auto& c : cases) {
    const double v = ssim(pattern(c.a, c.h, c.w), pattern(c.b, c.h, c.w));
    CHECK(std::abs(v - c.expected) < 1e-6);
  }
  CHECK(ssim(pattern(Pattern::Sine, 12, 12), pattern(Pattern::Sine, 12, 12)) == doctest::Approx(1.0).epsilon(1e-12));

  const ImageTensor a = pattern(Pattern::Sine, 20, 18);
  ImageTensor d = a;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 18; ++x)
      for (int c = 0; c < 3; ++c) d.at(y, x, c) = 0.8 * a.at(y, x, c) + 0.1 + 0.05 * std::sin(0.1 * x * y);
  CHECK(std::abs(ssim(a, d) - 0.9149528956872132) < 1e-6);

  const ImageTensor s32 = pattern(Pattern::Sine, 32, 32);
  const ImageTensor m32 = pattern(Pattern::Modular, 32, 32);
  const ImageTensor blend(32, 32, 0.7 * s32.values() + 0.3 * m32.values());
  CHECK(std::abs(ssim(s32, blend) - 0.6818636592387364) < 1e-6);
}

TEST_CASE("ssim of constants collapses to the luminance term") {
  const ImageTensor a(16, 16, Eigen::VectorXd::Constant(3 * 16 * 16, 0.2));
  const ImageTensor b(16, 16, Eigen::VectorXd::Constant(3 * 16 * 16, 0.7));
  const double c1 = 0.01 * 0.01;
  const double expected = (2 * 0.2 * 0.7 + c1) / (0.2 * 0.2 + 0.7 * 0.7 + c1);
  CHECK(std::abs(ssim(a, b) - expected) < 1e-12);
}

TEST_CASE("ssim symmetry, bounds and errors") {
  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    const ImageTensor a = random_image(rng, 16, 13);
    const ImageTensor b = random_image(rng, 16, 13);
    const double s = ssim(a, b);
    CHECK(std::abs(s - ssim(b, a)) < 1e-12);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
  CHECK(code_of([&] { ssim(ImageTensor(10, 20), ImageTensor(10, 20)); }) == ErrorCode::ImageTooSmall);
  CHECK(code_of([&] { ssim(ImageTensor(12, 12), ImageTensor(12, 13)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("feature distance") {
  const AxisFeatures feat;
  const ImageTensor r = channel_image(0, 0.5);
  const ImageTensor g = channel_image(1, 0.5);
  CHECK(feature_distance(r, r, feat) == doctest::Approx(0.0));
  CHECK(feature_distance(r, g, feat) == doctest::Approx(1.0));
  CHECK(feature_distance(r, channel_image(0, 0.9), feat) == doctest::Approx(0.0));
  CHECK(code_of([&] { feature_distance(r, ImageTensor(4, 4), feat); }) == ErrorCode::ZeroNorm);

  const Eigen::Vector3d u(1.0, -2.0, 0.5), v(0.3, 0.3, -1.0);
  CHECK(cosine_distance(u, v) == doctest::Approx(cosine_distance(7.0 * u, 0.2 * v)).epsilon(1e-14));
  CHECK(cosine_distance(u, -u) == doctest::Approx(2.0));
}

TEST_CASE("evaluate report") {
  Rng rng(6);
  std::vector<ImageTensor> truths, recons;
  for (int i = 0; i < 4; ++i) {
    truths.push_back(random_image(rng, 12, 12));
    ImageTensor r = truths.back();
    r.values() += 0.1 * rng.normal_vector(r.size());
    recons.push_back(r);
  }
  const AxisFeatures feat;
  const MetricReport rep = evaluate(recons, truths, feat);
  CHECK(rep.pix_comp == 100.0);
  CHECK(rep.ssim_items.size() == 4);
  CHECK(rep.feature_distance_items.size() == 4);
  CHECK(rep.pixel_correlation_items.size() == 4);
  double mean = 0.0;
  for (double s : rep.ssim_items) mean += s / 4;
  CHECK(rep.ssim_mean == doctest::Approx(mean).epsilon(1e-14));
  CHECK(rep.ssim_items[2] == ssim(recons[2], truths[2]));
  CHECK(rep.feature_distance_mean >= 0.0);
}
