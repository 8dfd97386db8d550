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
#include <utility>
#include <vector>

#include "itd/point_cloud.hpp"

namespace itd {

enum class ClientId : std::uint32_t {};

constexpr std::uint32_t to_underlying(ClientId id) noexcept {
  return static_cast<std::uint32_t>(id);
}

/// One client's pair of samples: xs from P^k (size m_k), ys from Q^k (size
/// n_k). Both clouds carry uniform weights and share a dimension.
class ClientSample {
 public:
  ClientSample(ClientId id, transport::PointCloud xs, transport::PointCloud ys);

  ClientId id() const noexcept { return id_; }
  const transport::PointCloud& xs() const noexcept { return xs_; }
  const transport::PointCloud& ys() const noexcept { return ys_; }
  std::size_t m() const noexcept { return xs_.size(); }
  std::size_t n() const noexcept { return ys_.size(); }
  std::size_t dim() const noexcept { return xs_.dim(); }

  bool operator==(const ClientSample&) const = default;

 private:
  ClientId id_;
  transport::PointCloud xs_;
  transport::PointCloud ys_;
};

}  // namespace itd

namespace itd::kernel {

/// Client weights w_k, one per selected client: nonnegative with at least
/// one positive entry, summing to one.
/// This is the empirical sampling measure over clients.
class ClientWeightVector {
 public:
  explicit ClientWeightVector(std::vector<double> weights);
  static ClientWeightVector equal(std::size_t k);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t k) const noexcept { return weights_[k]; }
  std::span<const double> values() const noexcept { return weights_; }

  bool operator==(const ClientWeightVector&) const = default;

 private:
  std::vector<double> weights_;
};

struct ClientValue {
  ClientId client;
  double value;
  bool operator==(const ClientValue&) const = default;
};

/// Empirical ITD^2 = sum_k w_k W_2^2(P_m^k, Q_n^k), with the per-client terms.
struct ITDStatistic {
  double value = 0.0;
  std::vector<ClientValue> per_client;
  bool operator==(const ITDStatistic&) const = default;
};

/// w_k = m_k / (2M) + n_k / (2N), renormalized so the vector sums to one.
ClientWeightVector client_weights(std::span<const std::size_t> m_sizes,
                                  std::span<const std::size_t> n_sizes);

/// (sum_k w_k d_k^p)^(1/p) for per-client distances d_k.
double itd_p(std::span<const double> distances, const ClientWeightVector& weights, double p);

/// Weighted sum of per-client values, compensated.
double weighted_sum(std::span<const double> values, const ClientWeightVector& weights);

/// W_2^2 between the two halves of one client.
double client_w2_squared(const ClientSample& client);

ITDStatistic empirical_itd2(std::span<const ClientSample> clients,
                            const ClientWeightVector& weights);

/// Plug-in CLT variance sum_k w_k (v_k - itd)^2.
double clt_variance(std::span<const double> per_client_values, const ClientWeightVector& weights,
                    double itd_p_value);

/// exp(-K m n t^2 / (2 (m + n) (Dx + Dy)^2)), the large-deviation bound on
/// ITD^2 - E[ITD^2] > t for equal client weights. Dx and Dy bound the
/// squared norms of the two samples.
double concentration_bound(std::size_t k, std::size_t m, std::size_t n, double dx, double dy,
                           double t);

enum class Side { kX, kY };

/// Pools one side of every client into a single cloud, each point carrying
/// weight w_k / size_k: the client-weighted mixture measure.
transport::PointCloud pooled_mixture(std::span<const ClientSample> clients,
                                     const ClientWeightVector& weights, Side side);

}  // namespace itd::kernel
