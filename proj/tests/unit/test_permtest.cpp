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

#include <algorithm>
#include <map>
#include <set>

#include "itd/error.hpp"
#include "itd/permtest.hpp"
#include "itd/synth.hpp"
#include "itd/transport.hpp"
#include "support/oracles.hpp"

namespace itd::permtest {
namespace {

using testing::make_client;

PermutedITDSample sample_of(std::vector<double> v) { return PermutedITDSample{std::move(v)}; }

TEST(LocalPermutedStats, SinglePointPerSide) {
  const auto c = make_client(0, {{0.0, 0.0}}, {{3.0, 4.0}});
  const auto batch = local_permuted_stats(c, 20, 1);
  ASSERT_EQ(batch.size(), 20u);
  for (double s : batch.stats) EXPECT_DOUBLE_EQ(s, 25.0);
  EXPECT_EQ(batch.client, ClientId{0});
  EXPECT_EQ(batch.seed, 1u);
}

TEST(LocalPermutedStats, IdenticalPooledPointsGiveZero) {
  const auto c = make_client(1, {{2.0}, {2.0}, {2.0}}, {{2.0}, {2.0}});
  for (double s : local_permuted_stats(c, 30, 2).stats) EXPECT_EQ(s, 0.0);
}

TEST(LocalPermutedStats, SplitFrequenciesMatchEnumeration) {
  const std::vector<std::vector<double>> pooled{{0.0}, {1.0}, {3.0}, {7.0}};
  const auto c = make_client(2, {pooled[0], pooled[1]}, {pooled[2], pooled[3]});
  // Each of the C(4, 2) = 6 splits is equally likely; group them by value.
  std::map<double, double> expected;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      std::vector<std::vector<double>> xs{pooled[i], pooled[j]}, ys;
      for (std::size_t r = 0; r < 4; ++r)
        if (r != i && r != j) ys.push_back(pooled[r]);
      const double v = testing::brute_force_ot(transport::PointCloud::from_points(xs),
                                               transport::PointCloud::from_points(ys), 2.0);
      expected[std::round(v * 1e9) / 1e9] += 1.0 / 6.0;
    }
  }
  const auto batch = local_permuted_stats(c, 6000, 77);
  std::map<double, double> observed;
  for (double s : batch.stats) observed[std::round(s * 1e9) / 1e9] += 1.0 / 6000.0;
  ASSERT_EQ(observed.size(), expected.size());
  for (const auto& [value, prob] : expected) EXPECT_NEAR(observed[value], prob, 0.03) << value;
}

TEST(LocalPermutedStats, AllStatsNonnegativeAndDeterministic) {
  Rng rng(3);
  const ClientSample c(ClientId{5}, testing::random_gaussian_cloud(12, 3, rng),
                       testing::random_gaussian_cloud(9, 3, rng, 1.0));
  const auto a = local_permuted_stats(c, 40, 123);
  const auto b = local_permuted_stats(c, 40, 123);
  EXPECT_EQ(a, b);
  for (double s : a.stats) EXPECT_GE(s, 0.0);
  EXPECT_NE(a.stats, local_permuted_stats(c, 40, 124).stats);
}

TEST(LocalPermutedStats, MatchesDirectSolveOfSplit) {
  Rng rng(4);
  const ClientSample c(ClientId{0}, testing::random_gaussian_cloud(5, 2, rng),
                       testing::random_gaussian_cloud(4, 2, rng));
  const PooledClient pooled(c);
  std::vector<std::size_t> order{8, 1, 6, 3, 0, 5, 2, 7, 4};
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < 9; ++i) {
    const auto p = order[i] < 5 ? c.xs().point(order[i]) : c.ys().point(order[i] - 5);
    auto& dst = i < 5 ? xs : ys;
    dst.insert(dst.end(), p.begin(), p.end());
  }
  const double direct = transport::wasserstein_pp(transport::PointCloud::uniform(2, xs),
                                                  transport::PointCloud::uniform(2, ys), 2.0);
  EXPECT_NEAR(pooled.split_statistic(order), direct, 1e-12);
}

TEST(LocalPermutedStats, RejectsZeroPermutations) {
  const auto c = make_client(0, {{0.0}}, {{1.0}});
  EXPECT_THROW(local_permuted_stats(c, 0, 1), InvalidArgument);
}

TEST(ClientStreamSeed, DistinctPerClientAndRoot) {
  std::set<std::uint64_t> seeds;
  for (std::uint32_t id = 0; id < 100; ++id) seeds.insert(client_stream_seed(42, ClientId{id}));
  EXPECT_EQ(seeds.size(), 100u);
  EXPECT_NE(client_stream_seed(1, ClientId{0}), client_stream_seed(2, ClientId{0}));
}

TEST(Aggregate, ConstantBatches) {
  std::vector<PermutationBatch> batches{{ClientId{0}, {2.0, 2.0}, 0}, {ClientId{1}, {4.0, 4.0, 4.0}, 0}};
  Rng rng(1);
  const auto s = aggregate_permuted_itd(batches, kernel::ClientWeightVector({0.25, 0.75}), 50, rng);
  ASSERT_EQ(s.size(), 50u);
  for (double v : s.values) EXPECT_DOUBLE_EQ(v, 3.5);
}

TEST(Aggregate, SingleBatchDrawsUniformly) {
  std::vector<PermutationBatch> batches{{ClientId{0}, {1.0, 2.0}, 0}};
  Rng rng(2);
  const auto s = aggregate_permuted_itd(batches, kernel::ClientWeightVector::equal(1), 20000, rng);
  const auto ones = std::count(s.values.begin(), s.values.end(), 1.0);
  EXPECT_EQ(ones + std::count(s.values.begin(), s.values.end(), 2.0), 20000);
  EXPECT_NEAR(static_cast<double>(ones) / 20000.0, 0.5, 0.02);
}

TEST(Aggregate, DegenerateWeightsUseTheFirstBatchOnly) {
  std::vector<PermutationBatch> batches{{ClientId{0}, {1.0, 2.0, 3.0}, 0}, {ClientId{1}, {100.0, 200.0}, 0},
                                        {ClientId{2}, {1000.0}, 0}};
  Rng rng(3);
  const auto s = aggregate_permuted_itd(batches, kernel::ClientWeightVector({1.0, 0.0, 0.0}), 500, rng);
  std::set<double> seen(s.values.begin(), s.values.end());
  EXPECT_EQ(seen, (std::set<double>{1.0, 2.0, 3.0}));
}

TEST(Aggregate, Errors) {
  Rng rng(4);
  std::vector<PermutationBatch> empty_batch{{ClientId{0}, {}, 0}};
  EXPECT_THROW(aggregate_permuted_itd(empty_batch, kernel::ClientWeightVector::equal(1), 10, rng),
               InvalidArgument);
  std::vector<PermutationBatch> one{{ClientId{0}, {1.0}, 0}};
  EXPECT_THROW(aggregate_permuted_itd(one, kernel::ClientWeightVector::equal(1), 0, rng), InvalidArgument);
  EXPECT_THROW(aggregate_permuted_itd(one, kernel::ClientWeightVector::equal(2), 10, rng), InvalidArgument);
}

TEST(CriticalValue, Examples) {
  EXPECT_EQ(critical_value(sample_of({1, 2, 3, 4}), 0.25), 4.0);
  std::vector<double> hundred(100);
  for (int i = 0; i < 100; ++i) hundred[i] = i + 1;
  EXPECT_EQ(critical_value(sample_of(hundred), 0.05), 96.0);
  EXPECT_EQ(critical_value(sample_of({0.7, 0.7, 0.7}), 0.05), 0.7);
}

TEST(CriticalValue, MatchesDefinitionByEnumeration) {
  Rng rng(5);
  std::uniform_int_distribution<int> value(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 30);
    for (auto& x : v) x = value(rng);
    const double alpha = 0.01 + 0.98 * (trial % 17) / 16.0;
    const double need = std::ceil((1.0 - alpha) * static_cast<double>(v.size()) - 1e-12);
    double expect = *std::max_element(v.begin(), v.end());
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (double z : sorted) {
      const auto below = std::count_if(v.begin(), v.end(), [&](double x) { return x < z; });
      if (static_cast<double>(below) >= need) {
        expect = z;
        break;
      }
    }
    EXPECT_EQ(critical_value(sample_of(v), alpha), expect) << "trial " << trial;
  }
}

TEST(CriticalValue, NondecreasingInConfidence) {
  Rng rng(6);
  std::vector<double> v(500);
  std::exponential_distribution<double> e;
  for (auto& x : v) x = e(rng);
  double prev = -1.0;
  for (double alpha = 0.99; alpha > 0.0; alpha -= 0.01) {
    const double c = critical_value(sample_of(v), alpha);
    EXPECT_GE(c, prev);
    prev = c;
  }
}

TEST(CriticalValue, Errors) {
  EXPECT_THROW(critical_value(sample_of({}), 0.05), InvalidArgument);
  EXPECT_THROW(critical_value(sample_of({1.0}), 0.0), InvalidArgument);
  EXPECT_THROW(critical_value(sample_of({1.0}), 1.0), InvalidArgument);
}

TEST(PValue, Examples) {
  EXPECT_DOUBLE_EQ(p_value(sample_of({1, 2, 3, 4}), 10.0), 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(p_value(sample_of({1, 2, 3, 4}), 0.0), 1.0);
  EXPECT_DOUBLE_EQ(p_value(sample_of({1, 2, 3, 4}), 2.5), 3.0 / 5.0);
  EXPECT_THROW(p_value(sample_of({}), 1.0), InvalidArgument);
}

TEST(Decide, Examples) {
  const kernel::ITDStatistic zero{0.0, {{ClientId{0}, 0.0}}};
  const auto keep = decide(zero, sample_of({0.1, 0.2, 0.3}), 0.05);
  EXPECT_FALSE(keep.reject);
  EXPECT_DOUBLE_EQ(keep.p_value, 1.0);
  const kernel::ITDStatistic big{5.0, {{ClientId{0}, 5.0}}};
  for (double alpha : {0.25, 0.5, 0.9}) EXPECT_TRUE(decide(big, sample_of({1, 2, 3}), alpha).reject);
  const auto at = decide(kernel::ITDStatistic{4.0, {}}, sample_of({1, 2, 3, 4}), 0.25);
  EXPECT_TRUE(at.reject);
  EXPECT_EQ(at.critical_value, 4.0);
}

TEST(RunTest, ReportIsConsistentAndDeterministic) {
  synth::ModelConfig cfg;
  cfg.model = synth::Model::C;
  cfg.clients = 3;
  cfg.dim = 2;
  cfg.m = 20;
  cfg.n = 25;
  cfg.seed = 8;
  const auto clients = synth::sample_model(cfg);
  const TestConfig tc{0.05, 30, 200, 99};
  const auto a = run_test(clients, tc);
  EXPECT_EQ(a, run_test(clients, tc));
  EXPECT_EQ(a.reject, a.observed.value >= a.critical_value);
  EXPECT_GT(a.p_value, 0.0);
  EXPECT_LE(a.p_value, 1.0);
  EXPECT_EQ(a.per_client_batches.size(), 3u);
  EXPECT_EQ(a.per_client_batches[1].count, 30u);
  EXPECT_EQ(a.m_sizes, (std::vector<std::size_t>{20, 20, 20}));
  EXPECT_EQ(a.local_permutations, 30u);
  EXPECT_EQ(a.global_permutations, 200u);
  EXPECT_EQ(a.seed, 99u);
  EXPECT_NE(a, run_test(clients, TestConfig{0.05, 30, 200, 100}));
}

TEST(RunTest, Errors) {
  EXPECT_THROW(run_test(std::vector<ClientSample>{}, TestConfig{}), InvalidArgument);
  const std::vector<ClientSample> one{make_client(0, {{0.0}}, {{1.0}})};
  EXPECT_THROW(run_test(one, TestConfig{0.0, 10, 10, 0}), InvalidArgument);
  EXPECT_THROW(run_test(one, TestConfig{0.05, 0, 10, 0}), InvalidArgument);
  EXPECT_THROW(run_test(one, TestConfig{0.05, 10, 0, 0}), InvalidArgument);
}

// Small 1-D clients with a fixed mean shift.
std::vector<ClientSample> shifted_clients(double shift, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ClientSample> out;
  for (std::uint32_t k = 0; k < 2; ++k) {
    out.emplace_back(ClientId{k}, testing::random_gaussian_cloud(m, 1, rng),
                     testing::random_gaussian_cloud(m, 1, rng, shift));
  }
  return out;
}

double rejection_rate(double shift, int reps) {
  int rejected = 0;
  for (int r = 0; r < reps; ++r) {
    const auto seed = derive_seed(31, {static_cast<std::uint64_t>(r)});
    rejected += run_test(shifted_clients(shift, 20, seed), TestConfig{0.05, 20, 200, seed}).reject;
  }
  return static_cast<double>(rejected) / reps;
}

TEST(RunTest, LevelUnderExchangeability) {
  const double rate = rejection_rate(0.0, 200);
  EXPECT_GE(rate, 0.005);
  EXPECT_LE(rate, 0.105);
}

TEST(RunTest, PowerIsMonotoneInShift) {
  const double r1 = rejection_rate(0.4, 200), r2 = rejection_rate(0.8, 200), r3 = rejection_rate(1.2, 200);
  EXPECT_GE(r2 + 0.05, r1);
  EXPECT_GE(r3 + 0.05, r2);
  EXPECT_GT(r3, 0.9);
}

TEST(LocalPermutedStats, NullShrinksWithSampleSize) {
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m : {25, 50, 100}) {
    const auto clients = shifted_clients(0.0, m, 5);
    const auto batch = local_permuted_stats(clients[0], 60, 6);
    const double mean = std::accumulate(batch.stats.begin(), batch.stats.end(), 0.0) / 60.0;
    EXPECT_LT(mean, prev) << m;
    prev = mean;
  }
}

}  // namespace
}  // namespace itd::permtest
