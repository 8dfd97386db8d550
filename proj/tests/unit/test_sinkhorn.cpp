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

#include <gtest/gtest.h>

#include <cmath>

#include "itd/error.hpp"
#include "itd/transport.hpp"
#include "support/oracles.hpp"

namespace itd::transport {
namespace {

const PointCloud kA = PointCloud::from_points({{0.0}, {1.0}});
const PointCloud kB = PointCloud::from_points({{0.5}, {1.5}});

SinkhornOptions eps(double e) {
  SinkhornOptions o;
  o.epsilon = e;
  return o;
}

TEST(Sinkhorn, LargeEpsilonGivesProductCoupling) {
  const std::vector<double> wx{0.3, 0.7}, wy{0.6, 0.4};
  const CostMatrix cost(cost_matrix(kA, kB, 2.0).entries(), 2.0);
  const auto r = solve_sinkhorn(cost, wx, wy, eps(1e3));
  ASSERT_TRUE(r.converged);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(r.plan(i, j), wx[i] * wy[j], 1e-3);
}

TEST(Sinkhorn, EntropicValueIsSandwichedByExactCost) {
  // exact <= <C, pi> <= <C, pi> + eps KL <= exact + eps log(m n)
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = testing::random_gaussian_cloud(6, 2, rng);
    const auto b = testing::random_gaussian_cloud(7, 2, rng, 0.5);
    const auto cost = cost_matrix(a, b, 2.0);
    const double exact = optimal_cost(cost, a.weights(), b.weights());
    for (double e : {0.5, 0.05}) {
      const auto r = solve_sinkhorn(cost, a.weights(), b.weights(), eps(e));
      ASSERT_TRUE(r.converged) << "trial " << trial << " epsilon " << e;
      EXPECT_GE(r.transport_cost, exact - 1e-8);
      EXPECT_GE(r.value, r.transport_cost - 1e-12);
      EXPECT_LE(r.value, exact + e * std::log(42.0) + 1e-8);
    }
  }
}

TEST(Sinkhorn, SymmetricProblemGivesSymmetricPlan) {
  Rng rng(1);
  const auto a = testing::random_uniform_cloud(5, 2, rng);
  for (double e : {0.05, 0.5, 5.0}) {
    const auto r = solve_sinkhorn(cost_matrix(a, a, 2.0), a.weights(), a.weights(), eps(e));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(r.plan(i, j), r.plan(j, i), 1e-9);
  }
}

TEST(Sinkhorn, MarginalsAndValueFormula) {
  Rng rng(2);
  const auto a = testing::random_gaussian_cloud(7, 2, rng);
  const auto b = testing::random_gaussian_cloud(9, 2, rng, 0.4);
  const auto cost = cost_matrix(a, b, 2.0);
  const auto r = solve_sinkhorn(cost, a.weights(), b.weights(), eps(0.2));
  ASSERT_TRUE(r.converged);
  EXPECT_LT(r.marginal_violation, 1e-9);
  const auto rows = r.plan.row_sums(), cols = r.plan.col_sums();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(rows[i], a.weights()[i], 1e-9);
  for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(cols[j], b.weights()[j], 1e-9);
  double c = 0.0, kl = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double p = r.plan(i, j);
      EXPECT_GT(p, 0.0);
      c += cost(i, j) * p;
      kl += p * std::log(p / (a.weights()[i] * b.weights()[j]));
    }
  }
  EXPECT_NEAR(r.transport_cost, c, 1e-10);
  EXPECT_NEAR(r.value, c + 0.2 * kl, 1e-8);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_EQ(r.f.size(), a.size());
  EXPECT_EQ(r.g.size(), b.size());
}

TEST(Sinkhorn, NonConvergenceIsReportedNotThrown) {
  Rng rng(3);
  const auto a = testing::random_gaussian_cloud(20, 2, rng);
  const auto b = testing::random_gaussian_cloud(20, 2, rng, 2.0);
  SinkhornOptions o = eps(0.01);
  o.max_iterations = 1;
  o.tolerance = 1e-14;
  const auto r = solve_sinkhorn(cost_matrix(a, b, 2.0), a.weights(), b.weights(), o);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_TRUE(std::isfinite(r.value));
}

TEST(Sinkhorn, TinyEpsilonStaysFinite) {
  Rng rng(4);
  const auto a = testing::random_gaussian_cloud(15, 2, rng, 0.0, 10.0);
  const auto b = testing::random_gaussian_cloud(15, 2, rng, 5.0, 10.0);
  SinkhornOptions o = eps(1e-3);
  o.max_iterations = 2000;
  const auto r = solve_sinkhorn(cost_matrix(a, b, 2.0), a.weights(), b.weights(), o);
  EXPECT_TRUE(std::isfinite(r.value));
  for (double v : r.plan.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Sinkhorn, Errors) {
  const auto cost = cost_matrix(kA, kB, 2.0);
  EXPECT_THROW(solve_sinkhorn(cost, kA.weights(), kB.weights(), eps(0.0)), InvalidArgument);
  EXPECT_THROW(solve_sinkhorn(cost, kA.weights(), kB.weights(), eps(-1.0)), InvalidArgument);
  SinkhornOptions bad_tol = eps(0.1);
  bad_tol.tolerance = 0.0;
  EXPECT_THROW(solve_sinkhorn(cost, kA.weights(), kB.weights(), bad_tol), InvalidArgument);
  const std::vector<double> zero{1.0, 0.0};
  EXPECT_THROW(solve_sinkhorn(cost, zero, kB.weights(), eps(0.1)), InvalidArgument);
}

TEST(SinkhornDivergence, VanishesOnIdenticalInputs) {
  Rng rng(5);
  const auto a = testing::random_gaussian_cloud(12, 3, rng);
  for (double e : {1.0, 0.1, 0.01}) EXPECT_NEAR(sinkhorn_divergence(a, a, eps(e)), 0.0, 1e-6);
}

TEST(SinkhornDivergence, Symmetric) {
  Rng rng(6);
  const auto a = testing::random_gaussian_cloud(8, 2, rng);
  const auto b = testing::random_gaussian_cloud(10, 2, rng, 1.0);
  EXPECT_NEAR(sinkhorn_divergence(a, b, eps(0.3)), sinkhorn_divergence(b, a, eps(0.3)), 1e-8);
}

TEST(SinkhornDivergence, ApproachesExactAsEpsilonShrinks) {
  const double exact = wasserstein_pp(kA, kB, 2.0);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (double e : {1.0, 0.1, 0.01}) {
    const double gap = std::abs(sinkhorn_divergence(kA, kB, eps(e)) - exact);
    EXPECT_LE(gap, prev_gap + 1e-4) << "epsilon " << e;
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 0.01);
}

}  // namespace
}  // namespace itd::transport
