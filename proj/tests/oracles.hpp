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

#ifndef LATENTDECODE_TESTS_ORACLES_HPP
#define LATENTDECODE_TESTS_ORACLES_HPP

// Independent reference computations used only by the tests.

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace latentdecode::testing {

/// Ridge weights from the normal equations on centered data.
inline Eigen::MatrixXd ridge_normal_equations(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                              double lambda) {
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  return gram.ldlt().solve(xc.transpose() * yc);
}

/// Sphere and Rosenbrock benchmark objectives.
inline double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

inline double rosenbrock(const Eigen::VectorXd& x) {
  double f = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
    f += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
  return f;
}

}  // namespace latentdecode::testing

#endif  // LATENTDECODE_TESTS_ORACLES_HPP
