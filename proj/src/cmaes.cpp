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

#include "latentdecode/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "latentdecode/error.hpp"
#include "latentdecode/parallel.hpp"
#include "latentdecode/rng.hpp"

namespace latentdecode::cmaes {

namespace {

constexpr double kMinSigma = 1e-250;
constexpr double kMinEigenRatio = 1e-14;

void refresh_eigen(CmaesState& s) {
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  Eigen::VectorXd values;
  symmetric_eigen(s.cov, values, s.eigen_basis);
  s.eigen_sqrt = values.cwiseMax(0.0).cwiseSqrt();
  s.eigen_evals = s.evals;
}

void check_degenerate(const CmaesState& s) {
  if (!std::isfinite(s.sigma) || s.sigma < kMinSigma)
    fail(ErrorCode::DegenerateCovariance, "step size collapsed to " + std::to_string(s.sigma));
  const double dmax = s.eigen_sqrt.maxCoeff();
  const double dmin = s.eigen_sqrt.minCoeff();
  if (!std::isfinite(dmax) || dmax <= 0.0 || dmin * dmin < kMinEigenRatio * dmax * dmax)
    fail(ErrorCode::DegenerateCovariance, "covariance eigenvalue ratio below threshold");
}

std::vector<Eigen::VectorXd> sample_steps(const CmaesState& s) {
  Rng rng(mix_seed(s.seed, static_cast<std::uint64_t>(s.generation)));
  std::vector<Eigen::VectorXd> steps;
  steps.reserve(static_cast<std::size_t>(s.population));
  for (int k = 0; k < s.population; ++k) {
    const Eigen::VectorXd n = rng.normal_vector(s.dim);
    steps.push_back(s.eigen_basis * s.eigen_sqrt.cwiseProduct(n));
  }
  return steps;
}

}  // namespace

int CmaesConfig::default_population(int dim) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

CmaesConfig CmaesConfig::resolved() const {
  CmaesConfig c = *this;
  require(c.dim >= 1, ErrorCode::ConfigError, "CMA-ES dim must be >= 1");
  if (c.population == 0) c.population = default_population(c.dim);
  require(c.population >= 2, ErrorCode::ConfigError, "CMA-ES population must be >= 2");
  require(std::isfinite(c.sigma0) && c.sigma0 > 0.0, ErrorCode::ConfigError,
          "CMA-ES sigma0 must be positive");
  if (c.mean0.size() == 0) c.mean0 = Eigen::VectorXd::Zero(c.dim);
  require(c.mean0.size() == c.dim, ErrorCode::ConfigError, "CMA-ES mean0 has wrong length");
  require(c.mean0.allFinite(), ErrorCode::ConfigError, "CMA-ES mean0 must be finite");
  require(c.max_evals >= c.population, ErrorCode::ConfigError,
          "CMA-ES max_evals must cover at least one generation");
  return c;
}

CmaesState initialize(const CmaesConfig& config) {
  const CmaesConfig c = config.resolved();
  CmaesState s;
  const double n = c.dim;
  s.dim = c.dim;
  s.population = c.population;
  s.mu = c.population / 2;
  s.seed = c.seed;
  s.mean = c.mean0;
  s.sigma = c.sigma0;
  s.cov = Eigen::MatrixXd::Identity(c.dim, c.dim);
  s.eigen_basis = Eigen::MatrixXd::Identity(c.dim, c.dim);
  s.eigen_sqrt = Eigen::VectorXd::Ones(c.dim);
  s.path_sigma = Eigen::VectorXd::Zero(c.dim);
  s.path_c = Eigen::VectorXd::Zero(c.dim);

  s.weights.resize(s.mu);
  for (int i = 0; i < s.mu; ++i) s.weights[i] = std::log(s.mu + 0.5) - std::log(i + 1.0);
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();

  s.c_sigma = (s.mu_eff + 2.0) / (n + s.mu_eff + 5.0);
  s.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (n + 1.0)) - 1.0) + s.c_sigma;
  s.c_c = (4.0 + s.mu_eff / n) / (n + 4.0 + 2.0 * s.mu_eff / n);
  s.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + s.mu_eff);
  s.c_mu = std::min(1.0 - s.c_1,
                    2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) / ((n + 2.0) * (n + 2.0) + s.mu_eff));
  s.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  return s;
}

std::vector<Eigen::VectorXd> ask(const CmaesState& state) {
  check_degenerate(state);
  std::vector<Eigen::VectorXd> out = sample_steps(state);
  for (auto& y : out) y = state.mean + state.sigma * y;
  return out;
}

void tell(CmaesState& s, const std::vector<Eigen::VectorXd>& candidates,
          const std::vector<double>& fitnesses) {
  const auto lambda = static_cast<std::size_t>(s.population);
  if (candidates.size() != lambda || fitnesses.size() != lambda)
    fail(ErrorCode::LengthMismatch, "tell expects " + std::to_string(lambda) +
                                        " candidates and fitnesses");
  for (std::size_t k = 0; k < lambda; ++k) {
    if (std::isnan(fitnesses[k]) || fitnesses[k] == -std::numeric_limits<double>::infinity())
      fail(ErrorCode::NonFiniteFitness, "fitness " + std::to_string(k) + " is not a number");
    if (candidates[k].size() != s.dim)
      fail(ErrorCode::LengthMismatch, "candidate " + std::to_string(k) + " has wrong length");
  }

  // Candidates produced by ask() reuse their exact sampled steps; anything
  // else is mapped back into step space.
  std::vector<Eigen::VectorXd> steps = sample_steps(s);
  for (std::size_t k = 0; k < lambda; ++k) {
    const Eigen::VectorXd asked = s.mean + s.sigma * steps[k];
    if (asked != candidates[k]) steps[k] = (candidates[k] - s.mean) / s.sigma;
  }

  std::vector<std::size_t> order(lambda);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitnesses[a] < fitnesses[b]; });

  const std::size_t top = order.front();
  if (std::isfinite(fitnesses[top]) && (!s.has_best || fitnesses[top] < s.best_f)) {
    s.best_f = fitnesses[top];
    s.best_x = candidates[top];
    s.has_best = true;
  }

  Eigen::VectorXd step_w = Eigen::VectorXd::Zero(s.dim);
  for (int i = 0; i < s.mu; ++i) step_w += s.weights[i] * steps[order[static_cast<std::size_t>(i)]];
  s.mean += s.sigma * step_w;
  s.evals += static_cast<long>(lambda);

  // C^{-1/2} * step_w through the cached decomposition.
  const Eigen::VectorXd inv_sqrt_step =
      s.eigen_basis * (s.eigen_basis.transpose() * step_w).cwiseQuotient(s.eigen_sqrt);
  s.path_sigma = (1.0 - s.c_sigma) * s.path_sigma +
                 std::sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff) * inv_sqrt_step;
  const double ps_norm = s.path_sigma.norm();
  const double decay = 1.0 - std::pow(1.0 - s.c_sigma, 2.0 * static_cast<double>(s.generation + 1));
  const bool h_sigma = ps_norm / std::sqrt(decay) / s.chi_n < 1.4 + 2.0 / (s.dim + 1.0);
  s.path_c = (1.0 - s.c_c) * s.path_c +
             (h_sigma ? std::sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) : 0.0) * step_w;

  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(s.dim, s.dim);
  for (int i = 0; i < s.mu; ++i) {
    const Eigen::VectorXd& y = steps[order[static_cast<std::size_t>(i)]];
    rank_mu.noalias() += s.weights[i] * (y * y.transpose());
  }
  const double old_weight =
      1.0 - s.c_1 - s.c_mu + (h_sigma ? 0.0 : s.c_1 * s.c_c * (2.0 - s.c_c));
  s.cov = old_weight * s.cov + s.c_1 * (s.path_c * s.path_c.transpose()) + s.c_mu * rank_mu;
  s.cov = 0.5 * (s.cov + s.cov.transpose());

  s.sigma *= std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0));
  ++s.generation;

  const double interval =
      static_cast<double>(s.population) / (s.c_1 + s.c_mu) / static_cast<double>(s.dim) / 10.0;
  if (static_cast<double>(s.evals - s.eigen_evals) > interval) refresh_eigen(s);
}

CmaesResult minimize(const Objective& f, const CmaesConfig& config, std::ostream* trace) {
  const CmaesConfig c = config.resolved();
  CmaesState state = initialize(c);
  CmaesResult result;
  const std::size_t flat_window =
      10 + static_cast<std::size_t>(std::ceil(30.0 * c.dim / c.population));
  if (trace) *trace << "generation,evals,sigma,f_best\n";

  while (state.evals + c.population <= c.max_evals) {
    const std::vector<Eigen::VectorXd> candidates = ask(state);
    std::vector<double> fitness(candidates.size());
    parallel_for(candidates.size(), c.threads,
                 [&](std::size_t k) { fitness[k] = f(candidates[k]); });
    tell(state, candidates, fitness);

    const double best = state.has_best ? state.best_f : std::numeric_limits<double>::infinity();
    result.history.push_back(best);
    result.sigma_history.push_back(state.sigma);
    if (trace) {
      char line[128];
      std::snprintf(line, sizeof line, "%ld,%ld,%.9g,%.17g\n", state.generation, state.evals,
                    state.sigma, best);
      *trace << line;
    }

    if (c.f_tol > 0.0 && result.history.size() >= flat_window) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (double v : fitness) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double hist_range =
          result.history[result.history.size() - flat_window] - result.history.back();
      if (std::isfinite(hi) && hi - lo < c.f_tol && hist_range < c.f_tol) break;
    }
  }

  result.evals = state.evals;
  result.f_best = state.has_best ? state.best_f : std::numeric_limits<double>::infinity();
  result.x_best = state.has_best ? state.best_x : state.mean;
  return result;
}

void symmetric_eigen(const Eigen::MatrixXd& input, Eigen::VectorXd& values,
                     Eigen::MatrixXd& vectors) {
  const Eigen::Index n = input.rows();
  Eigen::MatrixXd a = input;
  vectors = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = cs * akp - sn * akq;
          a(k, q) = sn * akp + cs * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = cs * apk - sn * aqk;
          a(q, k) = sn * apk + cs * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = vectors(k, p);
          const double vkq = vectors(k, q);
          vectors(k, p) = cs * vkp - sn * vkq;
          vectors(k, q) = sn * vkp + cs * vkq;
        }
      }
    }
  }

  values = a.diagonal();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return values[i] < values[j]; });
  Eigen::VectorXd sorted_values(n);
  Eigen::MatrixXd sorted_vectors(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    sorted_values[k] = values[order[static_cast<std::size_t>(k)]];
    sorted_vectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
  }
  values = std::move(sorted_values);
  vectors = std::move(sorted_vectors);
}

}  // namespace latentdecode::cmaes
