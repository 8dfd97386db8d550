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

#include <algorithm>
#include <cmath>
#include <string>

#include "itd/error.hpp"
#include "itd/summation.hpp"
#include "itd/transport.hpp"
#include "network_simplex.hpp"

namespace itd::transport {

namespace {

void check_problem(const CostMatrix& cost, std::span<const double> wx,
                   std::span<const double> wy) {
  if (wx.size() != cost.rows() || wy.size() != cost.cols())
    throw InvalidArgument("solve_exact: weight lengths do not match cost matrix shape");
  for (double w : wx)
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("solve_exact: bad source weight");
  for (double w : wy)
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("solve_exact: bad target weight");
  const double sx = compensated_sum(wx);
  const double sy = compensated_sum(wy);
  if (std::abs(sx - sy) > kMarginalTolerance)
    throw InvalidArgument("solve_exact: infeasible weights, totals " + std::to_string(sx) +
                          " and " + std::to_string(sy) + " differ");
}

detail::NetworkSimplex& workspace() {
  thread_local detail::NetworkSimplex solver;
  return solver;
}

detail::NetworkSimplex& run(const CostMatrix& cost, std::span<const double> wx,
                            std::span<const double> wy) {
  check_problem(cost, wx, wy);
  auto& solver = workspace();
  const std::uint64_t arcs = static_cast<std::uint64_t>(cost.rows()) * cost.cols();
  const std::uint64_t budget = 50 * arcs + 100000;
  const auto status =
      solver.solve(cost.entries().data(), cost.rows(), cost.cols(), wx, wy, budget);
  if (status != detail::NetworkSimplex::Status::kOptimal)
    throw NumericalError("solve_exact: network simplex exceeded its pivot budget");
  if (solver.artificial_flow() > kMarginalTolerance)
    throw NumericalError("solve_exact: no feasible coupling found");
  return solver;
}

}  // namespace

TransportPlan solve_exact(const CostMatrix& cost, std::span<const double> wx,
                          std::span<const double> wy) {
  const auto& solver = run(cost, wx, wy);
  TransportPlan out;
  out.plan = DenseMatrix(cost.rows(), cost.cols());
  for (std::size_t i = 0; i < cost.rows(); ++i)
    for (std::size_t j = 0; j < cost.cols(); ++j) out.plan(i, j) = solver.flow(i, j);
  out.value = std::max(0.0, solver.objective());
  return out;
}

double optimal_cost(const CostMatrix& cost, std::span<const double> wx,
                    std::span<const double> wy) {
  return std::max(0.0, run(cost, wx, wy).objective());
}

double wasserstein_pp(const PointCloud& a, const PointCloud& b, double p) {
  const auto cost = cost_matrix(a, b, p);
  return optimal_cost(cost, a.weights(), b.weights());
}

double wasserstein_p(const PointCloud& a, const PointCloud& b, double p) {
  const double v = wasserstein_pp(a, b, p);
  if (p == 2.0) return std::sqrt(v);
  if (p == 1.0) return v;
  return std::pow(v, 1.0 / p);
}

double wasserstein_1d_sorted(const PointCloud& a, const PointCloud& b, double p) {
  if (a.dim() != 1 || b.dim() != 1)
    throw InvalidArgument("wasserstein_1d_sorted: inputs must be one-dimensional");
  if (a.size() != b.size()) throw InvalidArgument("wasserstein_1d_sorted: size mismatch");
  if (!(p >= 1.0)) throw InvalidArgument("wasserstein_1d_sorted: order p must be >= 1");
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.weights()[i] - 1.0 / n) > kWeightSumTolerance ||
        std::abs(b.weights()[i] - 1.0 / n) > kWeightSumTolerance)
      throw InvalidArgument("wasserstein_1d_sorted: weights must be uniform");
  }
  std::vector<double> xs(a.coords().begin(), a.coords().end());
  std::vector<double> ys(b.coords().begin(), b.coords().end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  // Accumulate full-precision p-th powers, then take the root once.
  CompensatedSum acc;
  for (std::size_t i = 0; i < xs.size(); ++i) acc.add(std::pow(std::abs(xs[i] - ys[i]), p));
  const double vpp = acc.value() / n;
  if (p == 1.0) return vpp;
  if (p == 2.0) return std::sqrt(vpp);
  return std::pow(vpp, 1.0 / p);
}

}  // namespace itd::transport
