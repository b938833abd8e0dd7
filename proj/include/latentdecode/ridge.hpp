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

#ifndef LATENTDECODE_RIDGE_HPP
#define LATENTDECODE_RIDGE_HPP

#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace latentdecode::ridge {

/// Multi-target linear map with an unpenalized intercept.
///   weights: n_voxels x n_targets
///   bias == y_mean - x_mean^T weights
struct RidgeModel {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  double lambda = 0.0;
  Eigen::VectorXd x_mean;
  Eigen::VectorXd y_mean;

  Eigen::Index n_inputs() const { return weights.rows(); }
  Eigen::Index n_targets() const { return weights.cols(); }
};

/// Fits W minimizing |Xc W - Yc|_F^2 + lambda |W|_F^2 on column-centered data,
/// solved through a thin SVD of Xc. lambda == 0 requires full column rank.
RidgeModel fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda);

Eigen::MatrixXd predict(const RidgeModel& model, const Eigen::MatrixXd& x);

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<double> cv_mse;  // aligned with the candidate list
};

/// K-fold cross-validation over contiguous row blocks. Ties resolve to the
/// earliest candidate.
LambdaSelection select_lambda(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              const std::vector<double>& candidates, int k_folds);

/// Directory layout: weights.ldm, bias.ldm, x_mean.ldm, y_mean.ldm, meta.txt.
void save_model(const std::filesystem::path& dir, const RidgeModel& model);
RidgeModel load_model(const std::filesystem::path& dir);

}  // namespace latentdecode::ridge

#endif  // LATENTDECODE_RIDGE_HPP
