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

#ifndef LATENTDECODE_CMAES_HPP
#define LATENTDECODE_CMAES_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace latentdecode::cmaes {

struct CmaesConfig {
  int dim = 1;
  int population = 0;  // 0 selects 4 + floor(3 ln dim)
  double sigma0 = 1.0;
  Eigen::VectorXd mean0;  // empty means the origin
  long max_evals = 10000;
  double f_tol = 1e-12;   // <= 0 disables the flat-fitness stop
  std::uint64_t seed = 0;
  int threads = 1;         // objective evaluations per generation

  static int default_population(int dim);
  /// Throws ConfigError when invariants fail; fills population and mean0.
  CmaesConfig resolved() const;
};

/// Full strategy state. Mutated only by tell().
struct CmaesState {
  int dim = 0;
  int population = 0;
  int mu = 0;
  std::uint64_t seed = 0;

  Eigen::VectorXd mean;
  double sigma = 1.0;
  Eigen::MatrixXd cov;
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_c;
  Eigen::MatrixXd eigen_basis;   // columns are eigenvectors of cov
  Eigen::VectorXd eigen_sqrt;    // square roots of the eigenvalues
  long eigen_evals = 0;          // evals at last decomposition

  long generation = 0;
  long evals = 0;

  Eigen::VectorXd weights;
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;

  Eigen::VectorXd best_x;
  double best_f = 0.0;
  bool has_best = false;
};

CmaesState initialize(const CmaesConfig& config);

/// Samples mean + sigma * B * D * n for `population` standard normal n drawn
/// from a stream keyed by (seed, generation). Repeated calls without tell()
/// return identical candidates.
std::vector<Eigen::VectorXd> ask(const CmaesState& state);

/// Rank-mu / rank-one update with cumulative step-size adaptation. Fitness
/// +inf is allowed and ranks last; ties resolve by candidate index.
void tell(CmaesState& state, const std::vector<Eigen::VectorXd>& candidates,
          const std::vector<double>& fitnesses);

struct CmaesResult {
  Eigen::VectorXd x_best;
  double f_best = 0.0;
  std::vector<double> history;  // best-so-far after each generation
  std::vector<double> sigma_history;
  long evals = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Runs ask/tell until the evaluation budget is spent or fitness flattens
/// below f_tol. Optionally writes a CSV trace `generation,evals,sigma,f_best`.
CmaesResult minimize(const Objective& f, const CmaesConfig& config, std::ostream* trace = nullptr);

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues are
/// returned in ascending order with matching eigenvector columns.
void symmetric_eigen(const Eigen::MatrixXd& a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors);

}  // namespace latentdecode::cmaes

#endif  // LATENTDECODE_CMAES_HPP
