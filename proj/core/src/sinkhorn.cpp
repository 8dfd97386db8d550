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
#include <limits>

#include "itd/error.hpp"
#include "itd/summation.hpp"
#include "itd/transport.hpp"

namespace itd::transport {

namespace {

// log(sum_k exp(v_k)), shifted by the maximum.
double log_sum_exp(std::span<const double> v) noexcept {
  const double hi = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace

SinkhornResult solve_sinkhorn(const CostMatrix& cost, std::span<const double> wx,
                              std::span<const double> wy, const SinkhornOptions& options) {
  if (!(options.epsilon > 0.0) || !std::isfinite(options.epsilon))
    throw InvalidArgument("solve_sinkhorn: epsilon must be positive");
  if (!(options.tolerance > 0.0)) throw InvalidArgument("solve_sinkhorn: tolerance must be positive");
  const std::size_t m = cost.rows();
  const std::size_t n = cost.cols();
  if (wx.size() != m || wy.size() != n)
    throw InvalidArgument("solve_sinkhorn: weight lengths do not match cost matrix shape");
  for (double w : wx)
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("solve_sinkhorn: weights must be positive");
  for (double w : wy)
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("solve_sinkhorn: weights must be positive");
  if (std::abs(compensated_sum(wx) - compensated_sum(wy)) > kMarginalTolerance)
    throw InvalidArgument("solve_sinkhorn: infeasible weights");

  const double eps = options.epsilon;
  std::vector<double> log_a(m), log_b(n);
  for (std::size_t i = 0; i < m; ++i) log_a[i] = std::log(wx[i]);
  for (std::size_t j = 0; j < n; ++j) log_b[j] = std::log(wy[j]);

  SinkhornResult out;
  out.f.assign(m, 0.0);
  out.g.assign(n, 0.0);
  std::vector<double> scratch(std::max(m, n));

  auto row_violation = [&]() {
    double viol = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        r += std::exp((out.f[i] + out.g[j] - cost(i, j)) / eps + log_a[i] + log_b[j]);
      viol += std::abs(r - wx[i]);
    }
    return viol;
  };

  out.marginal_violation = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    // f_i = -eps log sum_j b_j exp((g_j - C_ij) / eps)
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) scratch[j] = (out.g[j] - cost(i, j)) / eps + log_b[j];
      out.f[i] = -eps * log_sum_exp({scratch.data(), n});
    }
    // g_j = -eps log sum_i a_i exp((f_i - C_ij) / eps)
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) scratch[i] = (out.f[i] - cost(i, j)) / eps + log_a[i];
      out.g[j] = -eps * log_sum_exp({scratch.data(), m});
    }
    out.iterations = it + 1;
    // Column marginals are exact after the g update; only rows can drift.
    out.marginal_violation = row_violation();
    if (out.marginal_violation < options.tolerance) {
      out.converged = true;
      break;
    }
  }

  out.plan = DenseMatrix(m, n);
  CompensatedSum transport, entropy;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double log_ratio = (out.f[i] + out.g[j] - cost(i, j)) / eps;  // log(pi / (a b))
      const double pij = std::exp(log_ratio + log_a[i] + log_b[j]);
      out.plan(i, j) = pij;
      transport.add(cost(i, j) * pij);
      entropy.add(pij * log_ratio);
    }
  }
  out.transport_cost = transport.value();
  out.value = out.transport_cost + eps * entropy.value();
  if (!std::isfinite(out.value)) throw NumericalError("solve_sinkhorn: non-finite objective");
  return out;
}

double sinkhorn_divergence(const PointCloud& a, const PointCloud& b,
                           const SinkhornOptions& options) {
  auto entropic = [&](const PointCloud& x, const PointCloud& y) {
    return solve_sinkhorn(cost_matrix(x, y, 2.0), x.weights(), y.weights(), options).value;
  };
  return entropic(a, b) - 0.5 * (entropic(a, a) + entropic(b, b));
}

}  // namespace itd::transport
