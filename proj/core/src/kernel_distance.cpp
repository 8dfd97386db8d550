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

#include "itd/kernel_distance.hpp"

#include <cmath>

#include "itd/error.hpp"
#include "itd/summation.hpp"
#include "itd/transport.hpp"

namespace itd {

namespace {

bool is_uniform(std::span<const double> w) {
  const double expected = 1.0 / static_cast<double>(w.size());
  for (double x : w)
    if (std::abs(x - expected) > transport::kWeightSumTolerance) return false;
  return true;
}

}  // namespace

ClientSample::ClientSample(ClientId id, transport::PointCloud xs, transport::PointCloud ys)
    : id_(id), xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.dim() != ys_.dim()) throw InvalidArgument("ClientSample: xs and ys differ in dimension");
  if (!is_uniform(xs_.weights()) || !is_uniform(ys_.weights()))
    throw InvalidArgument("ClientSample: empirical samples must carry uniform weights");
}

}  // namespace itd

namespace itd::kernel {

ClientWeightVector::ClientWeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidArgument("ClientWeightVector: no clients");
  bool any_positive = false;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0)
      throw InvalidArgument("ClientWeightVector: weights must be finite and nonnegative");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw InvalidArgument("ClientWeightVector: all weights are zero");
  if (std::abs(compensated_sum(weights_) - 1.0) > transport::kWeightSumTolerance)
    throw InvalidArgument("ClientWeightVector: weights must sum to 1");
}

ClientWeightVector ClientWeightVector::equal(std::size_t k) {
  if (k == 0) throw InvalidArgument("ClientWeightVector: no clients");
  return ClientWeightVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

ClientWeightVector client_weights(std::span<const std::size_t> m_sizes,
                                  std::span<const std::size_t> n_sizes) {
  if (m_sizes.empty()) throw InvalidArgument("client_weights: empty client list");
  if (m_sizes.size() != n_sizes.size())
    throw InvalidArgument("client_weights: size lists differ in length");
  double total_m = 0.0;
  double total_n = 0.0;
  for (std::size_t k = 0; k < m_sizes.size(); ++k) {
    if (m_sizes[k] == 0 || n_sizes[k] == 0)
      throw InvalidArgument("client_weights: every client needs at least one point per side");
    total_m += static_cast<double>(m_sizes[k]);
    total_n += static_cast<double>(n_sizes[k]);
  }
  std::vector<double> w(m_sizes.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = static_cast<double>(m_sizes[k]) / (2.0 * total_m) +
           static_cast<double>(n_sizes[k]) / (2.0 * total_n);
  }
  // All-equal sizes give exactly 1/K; anything else is renormalized.
  bool equal_sizes = true;
  for (std::size_t k = 1; k < w.size(); ++k)
    equal_sizes = equal_sizes && m_sizes[k] == m_sizes[0] && n_sizes[k] == n_sizes[0];
  if (equal_sizes) return ClientWeightVector::equal(w.size());
  const double total = compensated_sum(w);
  for (double& x : w) x /= total;
  return ClientWeightVector(std::move(w));
}

double weighted_sum(std::span<const double> values, const ClientWeightVector& weights) {
  if (values.size() != weights.size())
    throw InvalidArgument("weighted_sum: value and weight counts differ");
  CompensatedSum acc;
  for (std::size_t k = 0; k < values.size(); ++k) acc.add(weights[k] * values[k]);
  return acc.value();
}

double itd_p(std::span<const double> distances, const ClientWeightVector& weights, double p) {
  if (distances.size() != weights.size())
    throw InvalidArgument("itd_p: distance and weight counts differ");
  if (!(p >= 1.0)) throw InvalidArgument("itd_p: order p must be >= 1");
  CompensatedSum acc;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    if (!(distances[k] >= 0.0)) throw InvalidArgument("itd_p: negative distance");
    acc.add(weights[k] * std::pow(distances[k], p));
  }
  const double s = std::max(0.0, acc.value());
  if (p == 1.0) return s;
  if (p == 2.0) return std::sqrt(s);
  return std::pow(s, 1.0 / p);
}

double client_w2_squared(const ClientSample& client) {
  return transport::wasserstein_pp(client.xs(), client.ys(), 2.0);
}

ITDStatistic empirical_itd2(std::span<const ClientSample> clients,
                            const ClientWeightVector& weights) {
  if (clients.empty()) throw InvalidArgument("empirical_itd2: no clients");
  if (clients.size() != weights.size())
    throw InvalidArgument("empirical_itd2: client and weight counts differ");
  ITDStatistic out;
  out.per_client.reserve(clients.size());
  std::vector<double> values;
  values.reserve(clients.size());
  for (const auto& c : clients) {
    values.push_back(client_w2_squared(c));
    out.per_client.push_back({c.id(), values.back()});
  }
  out.value = weighted_sum(values, weights);
  return out;
}

double clt_variance(std::span<const double> per_client_values, const ClientWeightVector& weights,
                    double itd_p_value) {
  if (per_client_values.size() != weights.size())
    throw InvalidArgument("clt_variance: value and weight counts differ");
  CompensatedSum acc;
  for (std::size_t k = 0; k < per_client_values.size(); ++k) {
    const double dev = per_client_values[k] - itd_p_value;
    acc.add(weights[k] * dev * dev);
  }
  return std::max(0.0, acc.value());
}

double concentration_bound(std::size_t k, std::size_t m, std::size_t n, double dx, double dy,
                           double t) {
  if (k == 0 || m == 0 || n == 0)
    throw InvalidArgument("concentration_bound: sizes must be positive");
  if (!(dx > 0.0) || !(dy > 0.0))
    throw InvalidArgument("concentration_bound: Dx and Dy must be positive");
  if (!(t >= 0.0)) throw InvalidArgument("concentration_bound: t must be nonnegative");
  const double kd = static_cast<double>(k);
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double spread = dx + dy;
  const double exponent = kd * md * nd * t * t / (2.0 * (md + nd) * spread * spread);
  return std::exp(-exponent);
}

transport::PointCloud pooled_mixture(std::span<const ClientSample> clients,
                                     const ClientWeightVector& weights, Side side) {
  if (clients.empty()) throw InvalidArgument("pooled_mixture: no clients");
  if (clients.size() != weights.size())
    throw InvalidArgument("pooled_mixture: client and weight counts differ");
  const std::size_t dim = clients.front().dim();
  std::vector<double> coords;
  std::vector<double> w;
  for (std::size_t k = 0; k < clients.size(); ++k) {
    const auto& cloud = side == Side::kX ? clients[k].xs() : clients[k].ys();
    if (cloud.dim() != dim) throw InvalidArgument("pooled_mixture: clients differ in dimension");
    coords.insert(coords.end(), cloud.coords().begin(), cloud.coords().end());
    for (double wi : cloud.weights()) w.push_back(weights[k] * wi);
  }
  // Renormalize away rounding in the products; the mixture must be exact.
  const double total = compensated_sum(w);
  for (double& x : w) x /= total;
  return transport::PointCloud(dim, std::move(coords), std::move(w));
}

}  // namespace itd::kernel
