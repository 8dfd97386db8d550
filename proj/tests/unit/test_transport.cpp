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
#include <thread>

#include "itd/error.hpp"
#include "itd/transport.hpp"
#include "support/oracles.hpp"

namespace itd::transport {
namespace {

void expect_feasible(const TransportPlan& tp, std::span<const double> wx, std::span<const double> wy) {
  const auto rows = tp.plan.row_sums();
  const auto cols = tp.plan.col_sums();
  for (std::size_t i = 0; i < wx.size(); ++i) EXPECT_NEAR(rows[i], wx[i], kMarginalTolerance);
  for (std::size_t j = 0; j < wy.size(); ++j) EXPECT_NEAR(cols[j], wy[j], kMarginalTolerance);
  for (double v : tp.plan.data()) EXPECT_GE(v, 0.0);
  EXPECT_GE(tp.value, 0.0);
}

TEST(SolveExact, ForcedCoupling) {
  const CostMatrix cost(DenseMatrix(1, 1, 9.0), 2.0);
  const std::vector<double> w{1.0};
  const auto tp = solve_exact(cost, w, w);
  EXPECT_DOUBLE_EQ(tp.value, 9.0);
  EXPECT_DOUBLE_EQ(tp.plan(0, 0), 1.0);
}

TEST(SolveExact, TwoPointMonotoneMatching) {
  const auto a = PointCloud::from_points({{0.0}, {1.0}});
  const auto b = PointCloud::from_points({{0.5}, {1.5}});
  const auto tp = solve_exact(cost_matrix(a, b, 2.0), a.weights(), b.weights());
  EXPECT_NEAR(tp.value, 0.25, 1e-15);
  EXPECT_NEAR(tp.plan(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(tp.plan(1, 1), 0.5, 1e-15);
  expect_feasible(tp, a.weights(), b.weights());
}

TEST(SolveExact, IdenticalCloudsCostNothing) {
  Rng rng(5);
  const auto a = testing::random_gaussian_cloud(30, 3, rng);
  EXPECT_EQ(optimal_cost(cost_matrix(a, a, 2.0), a.weights(), a.weights()), 0.0);
}

TEST(SolveExact, MatchesPermutationBruteForce) {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 5;
    const std::size_t d = 1 + trial % 3;
    const auto a = testing::random_uniform_cloud(n, d, rng);
    const auto b = testing::random_uniform_cloud(n, d, rng);
    for (double p : {1.0, 2.0}) {
      const auto tp = solve_exact(cost_matrix(a, b, p), a.weights(), b.weights());
      EXPECT_NEAR(tp.value, testing::brute_force_ot(a, b, p), 1e-12) << "trial " << trial << " p " << p;
      expect_feasible(tp, a.weights(), b.weights());
    }
  }
}

TEST(SolveExact, UnequalWeightsMatchMonotoneOracle) {
  Rng rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + trial % 9;
    const std::size_t n = 1 + (trial * 7) % 11;
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<std::vector<double>> xs(m), ys(n);
    for (auto& x : xs) x = {u(rng)};
    for (auto& y : ys) y = {u(rng)};
    const auto a = PointCloud::from_points(xs, testing::random_weights(m, rng));
    const auto b = PointCloud::from_points(ys, testing::random_weights(n, rng));
    for (double p : {1.0, 2.0, 3.0}) {
      const auto tp = solve_exact(cost_matrix(a, b, p), a.weights(), b.weights());
      EXPECT_NEAR(tp.value, testing::monotone_1d_ot(a, b, p), 1e-10) << "trial " << trial;
      expect_feasible(tp, a.weights(), b.weights());
    }
  }
}

TEST(SolveExact, ZeroWeightsAndDegenerateSupports) {
  const auto a = PointCloud::from_points({{0.0}, {1.0}, {2.0}}, {0.0, 1.0, 0.0});
  const auto b = PointCloud::from_points({{1.0}, {1.0}});
  EXPECT_NEAR(optimal_cost(cost_matrix(a, b, 2.0), a.weights(), b.weights()), 0.0, 1e-15);
}

TEST(SolveExact, LargerInstanceIsFeasibleAndOptimalIn1D) {
  Rng rng(7);
  const auto a = testing::random_gaussian_cloud(200, 1, rng);
  const auto b = testing::random_gaussian_cloud(200, 1, rng, 0.5);
  const auto tp = solve_exact(cost_matrix(a, b, 2.0), a.weights(), b.weights());
  expect_feasible(tp, a.weights(), b.weights());
  EXPECT_NEAR(tp.value, std::pow(wasserstein_1d_sorted(a, b, 2.0), 2.0), 1e-10);
}

TEST(SolveExact, RejectsInfeasibleWeights) {
  const CostMatrix cost(DenseMatrix(2, 2, 1.0), 2.0);
  const std::vector<double> good{0.5, 0.5};
  const std::vector<double> off{0.5, 0.5 + 1e-8};
  const std::vector<double> wrong_size{1.0};
  EXPECT_THROW(solve_exact(cost, good, off), InvalidArgument);
  EXPECT_THROW(solve_exact(cost, good, wrong_size), InvalidArgument);
  const std::vector<double> negative{1.5, -0.5};
  EXPECT_THROW(solve_exact(cost, good, negative), InvalidArgument);
}

TEST(Wasserstein, Examples) {
  const auto a = PointCloud::from_points({{0.0}, {1.0}});
  const auto b = PointCloud::from_points({{0.5}, {1.5}});
  EXPECT_NEAR(wasserstein_p(a, b, 2.0), 0.5, 1e-15);
  EXPECT_EQ(wasserstein_p(a, a, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(wasserstein_p(PointCloud::from_points({{0.0}}), PointCloud::from_points({{3.0}}), 2.0), 3.0);
  EXPECT_NEAR(wasserstein_pp(a, b, 2.0), 0.25, 1e-15);
}

TEST(Wasserstein, DimensionMismatchPropagates) {
  EXPECT_THROW(wasserstein_p(PointCloud::from_points({{0.0}}), PointCloud::from_points({{0.0, 1.0}}), 2.0),
               InvalidArgument);
}

TEST(Wasserstein1DSorted, Examples) {
  const auto a = PointCloud::from_points({{0.0}, {1.0}});
  const auto b = PointCloud::from_points({{0.5}, {1.5}});
  EXPECT_NEAR(wasserstein_1d_sorted(a, b, 2.0), 0.5, 1e-15);
  EXPECT_EQ(wasserstein_1d_sorted(a, a, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(wasserstein_1d_sorted(PointCloud::from_points({{0.0}}), PointCloud::from_points({{5.0}}), 1.0),
                   5.0);
}

TEST(Wasserstein1DSorted, Errors) {
  const auto a = PointCloud::from_points({{0.0}, {1.0}});
  EXPECT_THROW(wasserstein_1d_sorted(a, PointCloud::from_points({{0.0}}), 2.0), InvalidArgument);
  EXPECT_THROW(wasserstein_1d_sorted(PointCloud::from_points({{0.0, 1.0}}), PointCloud::from_points({{0.0, 1.0}}), 2.0),
               InvalidArgument);
  EXPECT_THROW(wasserstein_1d_sorted(a, PointCloud::from_points({{0.0}, {1.0}}, {0.25, 0.75}), 2.0),
               InvalidArgument);
}

TEST(Wasserstein1DSorted, AgreesWithLinearProgram) {
  Rng rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 40;
    const auto a = testing::random_gaussian_cloud(n, 1, rng);
    const auto b = testing::random_gaussian_cloud(n, 1, rng, 0.3, 1.5);
    for (double p : {1.0, 2.0}) EXPECT_NEAR(wasserstein_p(a, b, p), wasserstein_1d_sorted(a, b, p), 1e-9);
  }
}

TEST(Wasserstein, MetricAxiomsAndOrderMonotonicity) {
  Rng rng(404);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t d = 1 + trial % 3;
    const auto a = testing::random_gaussian_cloud(8, d, rng);
    const auto b = testing::random_gaussian_cloud(11, d, rng, 0.5);
    const auto c = testing::random_uniform_cloud(6, d, rng);
    const double ab = wasserstein_p(a, b, 2.0), ba = wasserstein_p(b, a, 2.0);
    const double bc = wasserstein_p(b, c, 2.0), ac = wasserstein_p(a, c, 2.0);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, ba, 1e-9);
    EXPECT_LE(ac, ab + bc + 1e-9);
    EXPECT_LE(wasserstein_p(a, b, 1.0), ab + 1e-9);
  }
}

TEST(Wasserstein, ThreadLocalWorkspaceIsSafeAcrossThreads) {
  Rng rng(9);
  const auto a = testing::random_gaussian_cloud(60, 2, rng);
  const auto b = testing::random_gaussian_cloud(60, 2, rng, 1.0);
  const double serial = wasserstein_pp(a, b, 2.0);
  std::vector<double> out(4);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < out.size(); ++t)
    threads.emplace_back([&, t] {
      for (int r = 0; r < 10; ++r) out[t] = wasserstein_pp(a, b, 2.0);
    });
  for (auto& t : threads) t.join();
  for (double v : out) EXPECT_EQ(v, serial);
}

}  // namespace
}  // namespace itd::transport
