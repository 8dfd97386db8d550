/*
 * Copyright 2026 The ITD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "itd/point_cloud.hpp"

namespace itd::transport {

inline constexpr double kMarginalTolerance = 1e-9;

/// Optimal coupling for a cost matrix. `value` is sum_ij cost_ij * plan_ij,
/// i.e. W_p^p when the cost is a p-th power distance.
struct TransportPlan {
  DenseMatrix plan;
  double value = 0.0;
};

/// Exact discrete OT by network simplex on the bipartite transportation
/// graph. Weight vectors must each sum to one and agree in total to 1e-9.
/// Throws InvalidArgument on bad weights, NumericalError if the pivot
/// budget is exhausted.
TransportPlan solve_exact(const CostMatrix& cost, std::span<const double> wx,
                          std::span<const double> wy);

/// Same solve, value only; skips materializing the dense plan.
double optimal_cost(const CostMatrix& cost, std::span<const double> wx,
                    std::span<const double> wy);

/// W_p(a, b) = optimal_cost^(1/p).
double wasserstein_p(const PointCloud& a, const PointCloud& b, double p);

/// W_p^p(a, b) without the final root.
double wasserstein_pp(const PointCloud& a, const PointCloud& b, double p);

/// 1-D oracle: for equal-size uniform samples the sorted matching is
/// optimal, so W_p^p is the mean of |a_(i) - b_(i)|^p over order statistics.
double wasserstein_1d_sorted(const PointCloud& a, const PointCloud& b, double p);

struct SinkhornOptions {
  double epsilon = 0.1;
  double tolerance = 1e-9;  // L1 violation of the row marginal
  std::size_t max_iterations = 100000;
};

struct SinkhornResult {
  DenseMatrix plan;
  double value = 0.0;           // <C, pi> + eps * KL(pi | wx (x) wy)
  double transport_cost = 0.0;  // <C, pi>
  std::vector<double> f;        // dual potential on the source side
  std::vector<double> g;        // dual potential on the target side
  std::size_t iterations = 0;
  bool converged = false;
  double marginal_violation = 0.0;
};

/// Entropic OT by log-domain Sinkhorn iterations. Non-convergence within the
/// iteration budget is reported through `converged`, not thrown.
/// Weights must be strictly positive.
SinkhornResult solve_sinkhorn(const CostMatrix& cost, std::span<const double> wx,
                              std::span<const double> wy, const SinkhornOptions& options);

/// Debiased entropic divergence
///   W_eps(a, b) - (W_eps(a, a) + W_eps(b, b)) / 2
/// with squared Euclidean cost.
double sinkhorn_divergence(const PointCloud& a, const PointCloud& b,
                           const SinkhornOptions& options);

}  // namespace itd::transport
