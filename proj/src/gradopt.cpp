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

#include "latentdecode/gradopt.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "latentdecode/error.hpp"

namespace latentdecode::gradopt {

void RmspropConfig::validate() const {
  require(std::isfinite(learning_rate) && learning_rate > 0.0, ErrorCode::ConfigError,
          "RMSProp learning_rate must be positive");
  require(decay > 0.0 && decay < 1.0, ErrorCode::ConfigError, "RMSProp decay must be in (0,1)");
  require(std::isfinite(epsilon) && epsilon > 0.0, ErrorCode::ConfigError,
          "RMSProp epsilon must be positive");
  require(steps >= 0, ErrorCode::ConfigError, "RMSProp steps must be >= 0");
}

void rmsprop_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                  Eigen::VectorXd& accumulator, const RmspropConfig& config) {
  require(params.size() == grads.size() && params.size() == accumulator.size(),
          ErrorCode::ShapeMismatch, "rmsprop_step length mismatch");
  if (!grads.allFinite()) fail(ErrorCode::NonFiniteGradient, "gradient has non-finite entries");
  accumulator = config.decay * accumulator + (1.0 - config.decay) * grads.cwiseAbs2();
  params.array() -= config.learning_rate * grads.array() /
                    (accumulator.array().sqrt() + config.epsilon);
}

Eigen::VectorXd finite_diff_grad(const ScalarFn& f, const Eigen::VectorXd& x, double h) {
  require(std::isfinite(h) && h > 0.0, ErrorCode::ConfigError, "finite difference step must be > 0");
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      fail(ErrorCode::NonFiniteValue, "objective not finite near coordinate " + std::to_string(i));
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

GradOptTrace minimize_grad(const LossAndGrad& loss_and_grad, const Eigen::VectorXd& x0,
                           const RmspropConfig& config) {
  config.validate();
  GradOptTrace trace;
  trace.params = x0;
  trace.losses.reserve(static_cast<std::size_t>(config.steps) + 1);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x0.size());
  for (int step = 0; step < config.steps; ++step) {
    auto [loss, grad] = loss_and_grad(trace.params);
    trace.losses.push_back(loss);
    rmsprop_step(trace.params, grad, acc, config);
  }
  trace.losses.push_back(loss_and_grad(trace.params).first);
  return trace;
}

void write_loss_trace(std::ostream& out, const GradOptTrace& trace) {
  out << "step,loss\n";
  char line[64];
  for (std::size_t i = 0; i < trace.losses.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", i, trace.losses[i]);
    out << line;
  }
}

}  // namespace latentdecode::gradopt
