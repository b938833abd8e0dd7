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

#include "latentdecode/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/SVD>

#include "latentdecode/dataio.hpp"
#include "latentdecode/error.hpp"

namespace latentdecode::ridge {

namespace {

constexpr int kModelFormatVersion = 1;

// Thin SVD of a centered design, plus U^T Yc so that any lambda can be solved
// with one small product.
struct CenteredSolve {
  Eigen::VectorXd x_mean;
  Eigen::VectorXd y_mean;
  Eigen::MatrixXd v;
  Eigen::VectorXd s;
  Eigen::MatrixXd ut_y;

  CenteredSolve(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    x_mean = x.colwise().mean().transpose();
    y_mean = y.colwise().mean().transpose();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean.transpose();
    const Eigen::MatrixXd yc = y.rowwise() - y_mean.transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    s = svd.singularValues();
    v = svd.matrixV();
    ut_y = svd.matrixU().transpose() * yc;
  }

  bool full_column_rank() const {
    const Eigen::Index p = v.rows();
    if (s.size() < p) return false;
    const double smax = s.size() > 0 ? s[0] : 0.0;
    const double tol = smax * static_cast<double>(std::max(v.rows(), ut_y.rows())) *
                       std::numeric_limits<double>::epsilon();
    return p == 0 || s[p - 1] > tol;
  }

  RidgeModel solve(double lambda) const {
    if (lambda == 0.0 && !full_column_rank())
      fail(ErrorCode::SingularDesign, "lambda = 0 with a rank-deficient centered design");
    Eigen::VectorXd shrink(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double denom = s[i] * s[i] + lambda;
      shrink[i] = denom > 0.0 ? s[i] / denom : 0.0;
    }
    RidgeModel m;
    m.lambda = lambda;
    m.weights = v * (shrink.asDiagonal() * ut_y);
    m.x_mean = x_mean;
    m.y_mean = y_mean;
    m.bias = y_mean - m.weights.transpose() * x_mean;
    if (!m.weights.allFinite()) fail(ErrorCode::NonFinite, "ridge weights are not finite");
    return m;
  }
};

void check_inputs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  require(x.rows() == y.rows(), ErrorCode::ShapeMismatch,
          "X has " + std::to_string(x.rows()) + " rows, Y has " + std::to_string(y.rows()));
  require(x.allFinite() && y.allFinite(), ErrorCode::NonFinite, "non-finite regression input");
}

}  // namespace

RidgeModel fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda) {
  check_inputs(x, y);
  require(x.rows() >= 2, ErrorCode::TooFewSamples, "ridge fit needs at least two rows");
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorCode::ConfigError,
          "lambda must be finite and nonnegative");
  return CenteredSolve(x, y).solve(lambda);
}

Eigen::MatrixXd predict(const RidgeModel& model, const Eigen::MatrixXd& x) {
  require(x.cols() == model.n_inputs(), ErrorCode::ShapeMismatch,
          "predict expects " + std::to_string(model.n_inputs()) + " columns, got " +
              std::to_string(x.cols()));
  Eigen::MatrixXd out = x * model.weights;
  out.rowwise() += model.bias.transpose();
  return out;
}

LambdaSelection select_lambda(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              const std::vector<double>& candidates, int k_folds) {
  check_inputs(x, y);
  require(!candidates.empty(), ErrorCode::ConfigError, "no lambda candidates");
  for (double c : candidates)
    require(std::isfinite(c) && c >= 0.0, ErrorCode::ConfigError, "lambda candidates must be >= 0");
  require(k_folds >= 2, ErrorCode::ConfigError, "k_folds must be at least 2");
  const Eigen::Index n = x.rows();
  require(n >= k_folds, ErrorCode::TooFewSamples,
          std::to_string(n) + " samples for " + std::to_string(k_folds) + " folds");

  LambdaSelection out;
  out.cv_mse.assign(candidates.size(), 0.0);
  if (candidates.size() == 1) {
    out.lambda = candidates.front();
    out.cv_mse.front() = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  std::vector<double> sse(candidates.size(), 0.0);
  for (int f = 0; f < k_folds; ++f) {
    const Eigen::Index begin = n * f / k_folds;
    const Eigen::Index end = n * (f + 1) / k_folds;
    const Eigen::Index held = end - begin;
    Eigen::MatrixXd x_tr(n - held, x.cols()), y_tr(n - held, y.cols());
    x_tr << x.topRows(begin), x.bottomRows(n - end);
    y_tr << y.topRows(begin), y.bottomRows(n - end);
    require(x_tr.rows() >= 2, ErrorCode::TooFewSamples, "fold leaves fewer than two rows");
    const CenteredSolve solver(x_tr, y_tr);
    const Eigen::MatrixXd x_te = x.middleRows(begin, held);
    const Eigen::MatrixXd y_te = y.middleRows(begin, held);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      double err = std::numeric_limits<double>::infinity();
      try {
        err = (predict(solver.solve(candidates[c]), x_te) - y_te).squaredNorm();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularDesign) throw;
      }
      sse[c] += err;
    }
  }
  const double denom = static_cast<double>(n) * static_cast<double>(std::max<Eigen::Index>(1, y.cols()));
  std::size_t best = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    out.cv_mse[c] = sse[c] / denom;
    if (out.cv_mse[c] < out.cv_mse[best]) best = c;
  }
  out.lambda = candidates[best];
  return out;
}

void save_model(const std::filesystem::path& dir, const RidgeModel& model) {
  std::filesystem::create_directories(dir);
  write_matrix_d(dir / "weights.ldm", model.weights);
  write_matrix_d(dir / "bias.ldm", model.bias.transpose());
  write_matrix_d(dir / "x_mean.ldm", model.x_mean.transpose());
  write_matrix_d(dir / "y_mean.ldm", model.y_mean.transpose());
  std::ofstream meta(dir / "meta.txt", std::ios::trunc);
  if (!meta) fail(ErrorCode::IoFailure, "cannot write " + (dir / "meta.txt").string());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", model.lambda);
  meta << "format_version = " << kModelFormatVersion << "\n"
       << "lambda = " << buf << "\n"
       << "n_inputs = " << model.n_inputs() << "\n"
       << "n_targets = " << model.n_targets() << "\n";
}

RidgeModel load_model(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "meta.txt"))
    fail(ErrorCode::UpstreamMissing, "no ridge model at " + dir.string());
  RidgeModel m;
  std::ifstream meta(dir / "meta.txt");
  std::string line;
  while (std::getline(meta, line)) {
    std::istringstream ls(line);
    std::string key, eq, value;
    ls >> key >> eq >> value;
    if (key == "lambda") m.lambda = std::stod(value);
    if (key == "format_version" && std::stoi(value) != kModelFormatVersion)
      fail(ErrorCode::UnknownFormat, "unsupported model format version " + value);
  }
  m.weights = read_matrix_d(dir / "weights.ldm");
  m.bias = read_matrix_d(dir / "bias.ldm").transpose();
  m.x_mean = read_matrix_d(dir / "x_mean.ldm").transpose();
  m.y_mean = read_matrix_d(dir / "y_mean.ldm").transpose();
  require(m.bias.size() == m.n_targets() && m.y_mean.size() == m.n_targets() &&
              m.x_mean.size() == m.n_inputs(),
          ErrorCode::ShapeMismatch, "inconsistent ridge model files in " + dir.string());
  return m;
}

}  // namespace latentdecode::ridge
