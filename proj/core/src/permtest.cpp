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

#include "itd/permtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "itd/error.hpp"
#include "itd/summation.hpp"
#include "itd/transport.hpp"

namespace itd::permtest {

PooledClient::PooledClient(const ClientSample& client) : m_(client.m()), n_(client.n()) {
  const std::size_t total = m_ + n_;
  auto pooled_point = [&](std::size_t i) {
    return i < m_ ? client.xs().point(i) : client.ys().point(i - m_);
  };
  sq_dist_.assign(total * total, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = i + 1; j < total; ++j) {
      const double c = transport::ground_cost(pooled_point(i), pooled_point(j), 2.0);
      sq_dist_[i * total + j] = c;
      sq_dist_[j * total + i] = c;
    }
  }
}

double PooledClient::split_statistic(std::span<const std::size_t> order) const {
  const std::size_t total = m_ + n_;
  transport::DenseMatrix c(m_, n_);
  for (std::size_t a = 0; a < m_; ++a) {
    const double* row = sq_dist_.data() + order[a] * total;
    for (std::size_t b = 0; b < n_; ++b) c(a, b) = row[order[m_ + b]];
  }
  const std::vector<double> wx(m_, 1.0 / static_cast<double>(m_));
  const std::vector<double> wy(n_, 1.0 / static_cast<double>(n_));
  return transport::optimal_cost(transport::CostMatrix(std::move(c), 2.0), wx, wy);
}

std::uint64_t client_stream_seed(std::uint64_t root_seed, ClientId id) {
  return derive_seed(root_seed, {stream::kClientPermutation, to_underlying(id)});
}

PermutationBatch local_permuted_stats(const ClientSample& client, std::size_t local_permutations,
                                      std::uint64_t seed) {
  if (local_permutations == 0)
    throw InvalidArgument("local_permuted_stats: B_k must be at least 1");
  const PooledClient pooled(client);
  const std::size_t total = client.m() + client.n();
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});

  Rng rng(seed);
  PermutationBatch batch;
  batch.client = client.id();
  batch.seed = seed;
  batch.stats.reserve(local_permutations);
  for (std::size_t b = 0; b < local_permutations; ++b) {
    for (std::size_t i = total - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    batch.stats.push_back(pooled.split_statistic(order));
  }
  return batch;
}

PermutedITDSample aggregate_permuted_itd(std::span<const PermutationBatch> batches,
                                         const kernel::ClientWeightVector& weights,
                                         std::size_t global_permutations, Rng& rng) {
  if (global_permutations == 0)
    throw InvalidArgument("aggregate_permuted_itd: B must be at least 1");
  if (batches.size() != weights.size())
    throw InvalidArgument("aggregate_permuted_itd: batch and weight counts differ");
  for (const auto& b : batches) {
    if (b.stats.empty()) throw InvalidArgument("aggregate_permuted_itd: empty batch");
  }
  PermutedITDSample out;
  out.values.reserve(global_permutations);
  for (std::size_t round = 0; round < global_permutations; ++round) {
    CompensatedSum acc;
    for (std::size_t k = 0; k < batches.size(); ++k) {
      std::uniform_int_distribution<std::size_t> pick(0, batches[k].stats.size() - 1);
      acc.add(weights[k] * batches[k].stats[pick(rng)]);
    }
    out.values.push_back(acc.value());
  }
  return out;
}

double critical_value(const PermutedITDSample& sample, double alpha) {
  if (sample.values.empty()) throw InvalidArgument("critical_value: empty permutation sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("critical_value: alpha must be in (0, 1)");
  std::vector<double> sorted = sample.values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t b = sorted.size();
  const double target = (1.0 - alpha) * static_cast<double>(b);
  // Guard against (1 - alpha) * B landing one ulp above an integer.
  const auto need = static_cast<std::size_t>(std::ceil(target - 1e-9 * std::max(1.0, target)));
  if (need >= b) return sorted.back();
  // #{v < sorted[j]} is the index of the first copy of sorted[j].
  const auto first = std::lower_bound(sorted.begin(), sorted.end(), sorted[need]);
  if (static_cast<std::size_t>(first - sorted.begin()) >= need) return sorted[need];
  const auto next = std::upper_bound(sorted.begin(), sorted.end(), sorted[need]);
  return next == sorted.end() ? sorted.back() : *next;
}

double p_value(const PermutedITDSample& sample, double observed) {
  if (sample.values.empty()) throw InvalidArgument("p_value: empty permutation sample");
  const auto at_least =
      std::count_if(sample.values.begin(), sample.values.end(),
                    [observed](double v) { return v >= observed; });
  return static_cast<double>(1 + at_least) / static_cast<double>(sample.values.size() + 1);
}

TestReport decide(const kernel::ITDStatistic& observed, const PermutedITDSample& sample,
                  double alpha) {
  TestReport report;
  report.observed = observed;
  report.alpha = alpha;
  report.critical_value = critical_value(sample, alpha);
  report.p_value = p_value(sample, observed.value);
  report.reject = observed.value >= report.critical_value;
  return report;
}

BatchSummary summarize(const PermutationBatch& batch) {
  BatchSummary s;
  s.client = batch.client;
  s.count = batch.stats.size();
  s.seed = batch.seed;
  if (!batch.stats.empty()) {
    s.mean = compensated_sum(batch.stats) / static_cast<double>(batch.stats.size());
    const auto [lo, hi] = std::minmax_element(batch.stats.begin(), batch.stats.end());
    s.min = *lo;
    s.max = *hi;
  }
  return s;
}

TestReport finish_test(const kernel::ITDStatistic& observed,
                       std::span<const PermutationBatch> batches,
                       const kernel::ClientWeightVector& weights,
                       std::span<const std::size_t> m_sizes, std::span<const std::size_t> n_sizes,
                       const TestConfig& config) {
  Rng rng(derive_seed(config.seed, {stream::kAggregate}));
  const auto sample = aggregate_permuted_itd(batches, weights, config.global_permutations, rng);
  TestReport report = decide(observed, sample, config.alpha);
  for (const auto& b : batches) report.per_client_batches.push_back(summarize(b));
  report.weights.assign(weights.values().begin(), weights.values().end());
  report.m_sizes.assign(m_sizes.begin(), m_sizes.end());
  report.n_sizes.assign(n_sizes.begin(), n_sizes.end());
  report.local_permutations = config.local_permutations;
  report.global_permutations = config.global_permutations;
  report.seed = config.seed;
  return report;
}

TestReport run_test(std::span<const ClientSample> clients, const TestConfig& config) {
  if (clients.empty()) throw InvalidArgument("run_test: no clients");
  std::vector<std::size_t> m_sizes, n_sizes;
  for (const auto& c : clients) {
    m_sizes.push_back(c.m());
    n_sizes.push_back(c.n());
  }
  const auto weights = kernel::client_weights(m_sizes, n_sizes);
  const auto observed = kernel::empirical_itd2(clients, weights);
  std::vector<PermutationBatch> batches;
  batches.reserve(clients.size());
  for (const auto& c : clients) {
    batches.push_back(local_permuted_stats(c, config.local_permutations,
                                           client_stream_seed(config.seed, c.id())));
  }
  return finish_test(observed, batches, weights, m_sizes, n_sizes, config);
}

}  // namespace itd::permtest
