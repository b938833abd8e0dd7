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

#ifndef LATENTDECODE_GRADOPT_HPP
#define LATENTDECODE_GRADOPT_HPP

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace latentdecode::gradopt {

/// Non-centered RMSProp without momentum:
///   acc' = decay * acc + (1 - decay) * g^2
///   p'   = p - learning_rate * g / (sqrt(acc') + epsilon)
struct RmspropConfig {
  double learning_rate = 0.01;
  double decay = 0.9;
  double epsilon = 1e-8;
  int steps = 100;

  void validate() const;
};

struct GradOptTrace {
  std::vector<double> losses;  // steps + 1 entries, initial loss first
  Eigen::VectorXd params;
};

/// Updates params and accumulator in place.
void rmsprop_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                  Eigen::VectorXd& accumulator, const RmspropConfig& config);

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using LossAndGrad = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

/// Central differences with step h along every coordinate.
Eigen::VectorXd finite_diff_grad(const ScalarFn& f, const Eigen::VectorXd& x, double h);

GradOptTrace minimize_grad(const LossAndGrad& loss_and_grad, const Eigen::VectorXd& x0,
                           const RmspropConfig& config);

/// CSV `step,loss`.
void write_loss_trace(std::ostream& out, const GradOptTrace& trace);

}  // namespace latentdecode::gradopt

#endif  // LATENTDECODE_GRADOPT_HPP
