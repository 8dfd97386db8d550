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
#include <limits>

#include "itd/error.hpp"
#include "itd/point_cloud.hpp"
#include "support/oracles.hpp"

namespace itd::transport {
namespace {

TEST(PointCloud, UniformWeights) {
  const auto c = PointCloud::uniform(2, {0, 0, 1, 0, 0, 1, 1, 1});
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c.dim(), 2u);
  for (double w : c.weights()) EXPECT_DOUBLE_EQ(w, 0.25);
  EXPECT_DOUBLE_EQ(c.point(2)[1], 1.0);
}

TEST(PointCloud, FromPointsChecksDimensions) {
  EXPECT_THROW(PointCloud::from_points({{0.0, 1.0}, {2.0}}), InvalidArgument);
  EXPECT_THROW(PointCloud::from_points({}), InvalidArgument);
  EXPECT_THROW(PointCloud::from_points({{}}), InvalidArgument);
}

TEST(PointCloud, RejectsNonFiniteCoordinates) {
  EXPECT_THROW(PointCloud::from_points({{std::nan("")}}), InvalidArgument);
  EXPECT_THROW(PointCloud::from_points({{std::numeric_limits<double>::infinity()}}), InvalidArgument);
}

TEST(PointCloud, RejectsBadWeights) {
  EXPECT_THROW(PointCloud::from_points({{0.0}, {1.0}}, {0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(PointCloud::from_points({{0.0}, {1.0}}, {1.5, -0.5}), InvalidArgument);
  EXPECT_THROW(PointCloud::from_points({{0.0}, {1.0}}, {1.0}), InvalidArgument);
  EXPECT_NO_THROW(PointCloud::from_points({{0.0}, {1.0}}, {1.0, 0.0}));
}

TEST(PointCloud, WeightToleranceIsTight) {
  EXPECT_NO_THROW(PointCloud::from_points({{0.0}, {1.0}}, {0.5, 0.5 + 5e-13}));
  EXPECT_THROW(PointCloud::from_points({{0.0}, {1.0}}, {0.5, 0.5 + 1e-10}), InvalidArgument);
}

TEST(PointCloud, DuplicatePointsAllowed) {
  const auto c = PointCloud::from_points({{1.0}, {1.0}, {1.0}});
  EXPECT_EQ(c.size(), 3u);
}

TEST(CostMatrix, SinglePairSquared) {
  const auto c = cost_matrix(PointCloud::from_points({{0.0}}), PointCloud::from_points({{3.0}}), 2.0);
  ASSERT_EQ(c.rows(), 1u);
  ASSERT_EQ(c.cols(), 1u);
  EXPECT_DOUBLE_EQ(c(0, 0), 9.0);
}

TEST(CostMatrix, IdenticalCloudsHaveZeroDiagonal) {
  Rng rng(3);
  const auto a = testing::random_uniform_cloud(6, 3, rng);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    const auto c = cost_matrix(a, a, p);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(c(i, i), 0.0);
  }
}

TEST(CostMatrix, EuclideanOrderOne) {
  const auto c = cost_matrix(PointCloud::from_points({{0, 0}, {1, 0}}), PointCloud::from_points({{0, 1}}), 1.0);
  ASSERT_EQ(c.rows(), 2u);
  ASSERT_EQ(c.cols(), 1u);
  EXPECT_DOUBLE_EQ(c(0, 0), 1.0);
  EXPECT_NEAR(c(1, 0), std::sqrt(2.0), 1e-15);
}

TEST(CostMatrix, MatchesIndependentDistance) {
  Rng rng(11);
  const auto a = testing::random_gaussian_cloud(5, 4, rng);
  const auto b = testing::random_gaussian_cloud(7, 4, rng);
  for (double p : {1.0, 2.0, 2.5}) {
    const auto c = cost_matrix(a, b, p);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        const double expect = testing::euclid_pow(a.point(i), b.point(j), p);
        EXPECT_NEAR(c(i, j), expect, 1e-12 * std::max(1.0, expect));
      }
    }
  }
}

TEST(CostMatrix, Errors) {
  const auto a = PointCloud::from_points({{0.0, 1.0}});
  const auto b = PointCloud::from_points({{0.0}});
  EXPECT_THROW(cost_matrix(a, b, 2.0), InvalidArgument);
  EXPECT_THROW(cost_matrix(a, a, 0.5), InvalidArgument);
  DenseMatrix bad(1, 1, -1.0);
  EXPECT_THROW(CostMatrix(bad, 2.0), InvalidArgument);
  DenseMatrix inf(1, 1, std::numeric_limits<double>::infinity());
  EXPECT_THROW(CostMatrix(inf, 2.0), InvalidArgument);
}

}  // namespace
}  // namespace itd::transport
