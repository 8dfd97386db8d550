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
#include <cstdint>
#include <span>
#include <vector>

#include "itd/kernel_distance.hpp"
#include "itd/rng.hpp"

namespace itd::permtest {

inline constexpr std::size_t kDefaultLocalPermutations = 100;
inline constexpr std::size_t kDefaultGlobalPermutations = 1000;

/// B_k permuted local statistics W_2^2 of one client, and the seed that
/// produced them.
struct PermutationBatch {
  ClientId client{};
  std::vector<double> stats;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return stats.size(); }
  bool operator==(const PermutationBatch&) const = default;
};

/// B permuted values of the integrated statistic.
struct PermutedITDSample {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool operator==(const PermutedITDSample&) const = default;
};

struct BatchSummary {
  ClientId client{};
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const BatchSummary&) const = default;
};

struct TestConfig {
  double alpha = 0.05;
  std::size_t local_permutations = kDefaultLocalPermutations;    // B_k
  std::size_t global_permutations = kDefaultGlobalPermutations;  // B
  std::uint64_t seed = 0;
};

struct TestReport {
  kernel::ITDStatistic observed;
  double critical_value = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  std::vector<BatchSummary> per_client_batches;
  // config echo
  std::vector<double> weights;
  std::vector<std::size_t> m_sizes;
  std::vector<std::size_t> n_sizes;
  std::size_t local_permutations = 0;
  std::size_t global_permutations = 0;
  std::uint64_t seed = 0;

  std::size_t clients() const noexcept { return observed.per_client.size(); }
  bool operator==(const TestReport&) const = default;
};

/// Precomputed pooled squared-distance matrix of one client, so each
/// permutation only gathers a submatrix.
class PooledClient {
 public:
  explicit PooledClient(const ClientSample& client);

  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  /// W_2^2 between the first m and the last n pooled entries under `order`.
  double split_statistic(std::span<const std::size_t> order) const;

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<double> sq_dist_;  // (m + n)^2, row-major
};

/// Seed of client `id`'s permutation stream under a run's root seed.
std::uint64_t client_stream_seed(std::uint64_t root_seed, ClientId id);

/// Fisher-Yates shuffles of the pooled m + n points, each split into the
/// first m and last n; returns the B_k resulting W_2^2 values.
PermutationBatch local_permuted_stats(const ClientSample& client, std::size_t local_permutations,
                                      std::uint64_t seed);

/// Each of the B values is sum_k w_k * (uniform draw from batch k). Draws are
/// independent across clients and rounds (sampling with replacement).
PermutedITDSample aggregate_permuted_itd(std::span<const PermutationBatch> batches,
                                         const kernel::ClientWeightVector& weights,
                                         std::size_t global_permutations, Rng& rng);

/// Smallest sample value z with #{v < z} >= ceil((1 - alpha) B); falls back
/// to the sample maximum when no sample value reaches the count (ties).
double critical_value(const PermutedITDSample& sample, double alpha);

/// (1 + #{v >= observed}) / (B + 1).
double p_value(const PermutedITDSample& sample, double observed);

/// Rejects iff observed >= critical value. Config-echo fields are left for
/// the caller.
TestReport decide(const kernel::ITDStatistic& observed, const PermutedITDSample& sample,
                  double alpha);

BatchSummary summarize(const PermutationBatch& batch);

/// Whole procedure in one process: weights from sizes, observed statistic,
/// per-client batches on derived seeds, aggregation on the coordinator
/// stream, decision. The distributed coordinator must reproduce this.
TestReport run_test(std::span<const ClientSample> clients, const TestConfig& config);

/// Same, reusing precomputed batches and observed statistic.
TestReport finish_test(const kernel::ITDStatistic& observed,
                       std::span<const PermutationBatch> batches,
                       const kernel::ClientWeightVector& weights,
                       std::span<const std::size_t> m_sizes, std::span<const std::size_t> n_sizes,
                       const TestConfig& config);

}  // namespace itd::permtest
