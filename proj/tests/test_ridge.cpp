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

#include <Eigen/QR>

#include "latentdecode/ridge.hpp"
#include "latentdecode/rng.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace latentdecode;
using latentdecode::testing::code_of;
using latentdecode::testing::rel_err;
using latentdecode::testing::ridge_normal_equations;

TEST_CASE("identity design shrinks centered targets by 1/(1+lambda)") {
  const int n = 6;
  Rng rng(1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd y = rng.normal_matrix(n, 3);
  const double lambda = 2.0;
  const auto m = ridge::fit(x, y, lambda);
  // Centered identity has singular values 1 (n-1 times) and 0; the fit on
  // that subspace is Yc/(1+lambda) mapped through the centering projector.
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
  CHECK(rel_err(xc * m.weights, yc / (1.0 + lambda)) < 1e-12);
  CHECK(rel_err(m.weights, ridge_normal_equations(x, y, lambda)) < 1e-12);
}

TEST_CASE("zero targets give zero weights and bias") {
  Rng rng(2);
  const auto m = ridge::fit(rng.normal_matrix(10, 4), Eigen::MatrixXd::Zero(10, 2), 1.0);
  CHECK(m.weights.isZero(0.0));
  CHECK(m.bias.isZero(0.0));
}

TEST_CASE("SVD path matches the normal-equation oracle") {
  Rng rng(3);
  const Eigen::MatrixXd x = rng.normal_matrix(20, 7);
  const Eigen::MatrixXd y = rng.normal_matrix(20, 3);
  const auto m = ridge::fit(x, y, 1.0);
  CHECK(rel_err(m.weights, ridge_normal_equations(x, y, 1.0)) < 1e-8);
  // centering identity
  CHECK(rel_err(m.bias, m.y_mean - m.weights.transpose() * m.x_mean) < 1e-12);
}

TEST_CASE("wide designs agree with the oracle too") {
  Rng rng(4);
  const Eigen::MatrixXd x = rng.normal_matrix(30, 80);
  const Eigen::MatrixXd y = rng.normal_matrix(30, 5);
  for (double lambda : {0.1, 1.0, 10.0})
    CHECK(rel_err(ridge::fit(x, y, lambda).weights, ridge_normal_equations(x, y, lambda)) < 1e-8);
}

TEST_CASE("lambda zero on a tall full-rank design is least squares") {
  Rng rng(5);
  const Eigen::MatrixXd x = rng.normal_matrix(40, 5);
  const Eigen::MatrixXd y = rng.normal_matrix(40, 2);
  const auto m = ridge::fit(x, y, 0.0);
  const double resid = (ridge::predict(m, x) - y).norm();
  Eigen::MatrixXd xa(40, 6);
  xa << x, Eigen::VectorXd::Ones(40);
  const Eigen::MatrixXd ls = xa.colPivHouseholderQr().solve(y);
  CHECK(resid <= (xa * ls - y).norm() + 1e-8);
}

TEST_CASE("lambda zero on a rank-deficient design is refused") {
  Rng rng(6);
  Eigen::MatrixXd x = rng.normal_matrix(10, 3);
  x.col(2) = x.col(0) + x.col(1);
  CHECK(code_of([&] { ridge::fit(x, rng.normal_matrix(10, 1), 0.0); }) == ErrorCode::SingularDesign);
  CHECK_NOTHROW(ridge::fit(x, rng.normal_matrix(10, 1), 0.5));
}

TEST_CASE("fit argument validation") {
  Rng rng(7);
  CHECK(code_of([&] { ridge::fit(rng.normal_matrix(5, 2), rng.normal_matrix(4, 1), 1.0); }) ==
        ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { ridge::fit(rng.normal_matrix(1, 2), rng.normal_matrix(1, 1), 1.0); }) ==
        ErrorCode::TooFewSamples);
  Eigen::MatrixXd bad = rng.normal_matrix(5, 2);
  bad(0, 0) = std::nan("");
  CHECK(code_of([&] { ridge::fit(bad, rng.normal_matrix(5, 1), 1.0); }) == ErrorCode::NonFinite);
}

TEST_CASE("predict at the training mean returns the target mean") {
  Rng rng(8);
  const Eigen::MatrixXd x = rng.normal_matrix(15, 4);
  const Eigen::MatrixXd y = rng.normal_matrix(15, 3);
  const auto m = ridge::fit(x, y, 0.7);
  const Eigen::MatrixXd p = ridge::predict(m, m.x_mean.transpose());
  CHECK(rel_err(p.transpose(), m.y_mean) < 1e-12);
  CHECK(code_of([&] { ridge::predict(m, rng.normal_matrix(2, 5)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("an all-zero voxel column does not change predictions") {
  Rng rng(9);
  const Eigen::MatrixXd x = rng.normal_matrix(15, 4);
  const Eigen::MatrixXd y = rng.normal_matrix(15, 2);
  Eigen::MatrixXd xz(15, 5);
  xz << x, Eigen::VectorXd::Zero(15);
  const auto a = ridge::fit(x, y, 1.0);
  const auto b = ridge::fit(xz, y, 1.0);
  CHECK(b.weights.row(4).isZero(1e-14));
  const Eigen::MatrixXd q = rng.normal_matrix(3, 4);
  Eigen::MatrixXd qz(3, 5);
  qz << q, Eigen::VectorXd::Zero(3);
  CHECK(rel_err(ridge::predict(b, qz), ridge::predict(a, q)) < 1e-12);
}

TEST_CASE("weight norm is monotone in lambda") {
  Rng rng(10);
  const Eigen::MatrixXd x = rng.normal_matrix(25, 10);
  const Eigen::MatrixXd y = rng.normal_matrix(25, 4);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4}) {
    const double norm = ridge::fit(x, y, lambda).weights.norm();
    CHECK(norm <= prev);
    prev = norm;
  }
}

TEST_CASE("joint fit equals per-target fits") {
  Rng rng(11);
  const Eigen::MatrixXd x = rng.normal_matrix(30, 8);
  const Eigen::MatrixXd y = rng.normal_matrix(30, 5);
  const auto joint = ridge::fit(x, y, 3.0);
  for (int t = 0; t < 5; ++t) {
    const auto single = ridge::fit(x, y.col(t), 3.0);
    CHECK((single.weights.col(0) - joint.weights.col(t)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(single.bias[0] - joint.bias[t]) < 1e-12);
  }
}

TEST_CASE("duplicated rows give duplicated predictions") {
  Rng rng(12);
  const Eigen::MatrixXd x = rng.normal_matrix(20, 4);
  const auto m = ridge::fit(x, rng.normal_matrix(20, 2), 1.0);
  Eigen::MatrixXd q(2, 4);
  q.row(0) = x.row(3);
  q.row(1) = x.row(3);
  const Eigen::MatrixXd p = ridge::predict(m, q);
  CHECK(p.row(0) == p.row(1));
}

TEST_CASE("select_lambda") {
  Rng rng(13);
  SUBCASE("noiseless data prefers the smallest candidate") {
    const Eigen::MatrixXd x = rng.normal_matrix(100, 5);
    const Eigen::MatrixXd y = x * rng.normal_matrix(5, 3);
    const auto sel = ridge::select_lambda(x, y, {0.001, 1.0, 100.0}, 5);
    CHECK(sel.lambda == 0.001);
    CHECK(sel.cv_mse.size() == 3);
    CHECK(sel.cv_mse[0] <= sel.cv_mse[1]);
  }
  SUBCASE("pure noise prefers the largest candidate on most seeds") {
    int largest = 0;
    for (int s = 0; s < 10; ++s) {
      Rng r(mix_seed(77, s));
      const auto sel = ridge::select_lambda(r.normal_matrix(60, 20), r.normal_matrix(60, 2),
                                            {0.1, 10.0, 1000.0, 1e5}, 5);
      largest += sel.lambda == 1e5;
    }
    CHECK(largest > 5);
  }
  SUBCASE("single candidate is returned as is") {
    const auto sel = ridge::select_lambda(rng.normal_matrix(10, 2), rng.normal_matrix(10, 1), {4.0}, 3);
    CHECK(sel.lambda == 4.0);
  }
  SUBCASE("too few samples") {
    CHECK(code_of([&] { ridge::select_lambda(rng.normal_matrix(3, 2), rng.normal_matrix(3, 1), {1.0, 2.0}, 5); }) ==
          ErrorCode::TooFewSamples);
  }
  SUBCASE("deterministic") {
    const Eigen::MatrixXd x = rng.normal_matrix(40, 6);
    const Eigen::MatrixXd y = rng.normal_matrix(40, 2);
    const auto a = ridge::select_lambda(x, y, {0.1, 1.0, 10.0}, 4);
    const auto b = ridge::select_lambda(x, y, {0.1, 1.0, 10.0}, 4);
    CHECK(a.cv_mse == b.cv_mse);
  }
}

TEST_CASE("model save/load round trip") {
  latentdecode::testing::TempDir dir;
  Rng rng(14);
  const auto m = ridge::fit(rng.normal_matrix(12, 3), rng.normal_matrix(12, 2), 0.25);
  ridge::save_model(dir / "model", m);
  const auto back = ridge::load_model(dir / "model");
  CHECK(back.lambda == 0.25);
  CHECK((back.weights - m.weights).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(code_of([&] { ridge::load_model(dir / "missing"); }) == ErrorCode::UpstreamMissing);
}
