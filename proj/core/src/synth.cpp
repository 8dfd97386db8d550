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

#include "itd/synth.hpp"

#include <cmath>
#include <random>

#include "itd/error.hpp"
#include "itd/rng.hpp"

namespace itd::synth {

std::string_view to_string(Model m) noexcept {
  switch (m) {
    case Model::A: return "A";
    case Model::B: return "B";
    case Model::C: return "C";
    case Model::D: return "D";
  }
  return "?";
}

std::string_view to_string(Distribution d) noexcept {
  switch (d) {
    case Distribution::Normal: return "normal";
    case Distribution::LogNormal: return "lognormal";
    case Distribution::T5: return "t5";
  }
  return "?";
}

std::optional<Model> parse_model(std::string_view s) noexcept {
  if (s == "A" || s == "a") return Model::A;
  if (s == "B" || s == "b") return Model::B;
  if (s == "C" || s == "c") return Model::C;
  if (s == "D" || s == "d") return Model::D;
  return std::nullopt;
}

std::optional<Distribution> parse_distribution(std::string_view s) noexcept {
  if (s == "normal") return Distribution::Normal;
  if (s == "lognormal" || s == "log-normal") return Distribution::LogNormal;
  if (s == "t5" || s == "t") return Distribution::T5;
  return std::nullopt;
}

void ModelConfig::validate() const {
  if (clients == 0) throw InvalidArgument("ModelConfig: K must be >= 1");
  if (dim == 0) throw InvalidArgument("ModelConfig: dimension must be >= 1");
  if (m == 0 || n == 0) throw InvalidArgument("ModelConfig: sample sizes must be >= 1");
  if (!(shift_sd >= 0.0) || !std::isfinite(shift_sd))
    throw InvalidArgument("ModelConfig: shift_sd must be finite and nonnegative");
}

namespace {

Rng client_rng(std::uint64_t seed, std::size_t client_index) {
  return Rng(derive_seed(seed, {stream::kData, client_index}));
}

ClientParams draw_params(const ModelConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> mean_dist(-1.0, 1.0);
  std::uniform_real_distribution<double> scale_dist(0.8, 1.2);
  std::normal_distribution<double> unit;
  ClientParams p;
  p.mean.resize(cfg.dim);
  p.scale.resize(cfg.dim);
  p.scale_shift.resize(cfg.dim);
  p.mean_shift.resize(cfg.dim);
  for (auto& v : p.mean) v = mean_dist(rng);
  for (auto& v : p.scale) v = scale_dist(rng);
  // Drawn as sd * z so every model consumes the same stream; shift_sd = 0
  // then reproduces Model A exactly.
  for (auto& v : p.scale_shift) v = cfg.shift_sd * unit(rng);
  for (auto& v : p.mean_shift) v = cfg.shift_sd * unit(rng);
  return p;
}

std::vector<double> draw_points(Distribution dist, std::size_t count,
                                const std::vector<double>& mean, const std::vector<double>& sd,
                                Rng& rng) {
  const std::size_t d = mean.size();
  std::normal_distribution<double> unit;
  std::chi_squared_distribution<double> chi2(5.0);
  std::vector<double> out(count * d);
  for (std::size_t i = 0; i < count; ++i) {
    // Multivariate t: one chi-square mixing draw per point, shared by all
    // coordinates.
    const double mix = dist == Distribution::T5 ? std::sqrt(5.0 / chi2(rng)) : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = unit(rng) * mix;
      const double x = mean[j] + sd[j] * z;
      out[i * d + j] = dist == Distribution::LogNormal ? std::exp(x) : x;
    }
  }
  return out;
}

}  // namespace

ClientParams draw_client_params(const ModelConfig& cfg, std::size_t client_index) {
  cfg.validate();
  Rng rng = client_rng(cfg.seed, client_index);
  return draw_params(cfg, rng);
}

std::vector<ClientSample> sample_model(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ClientSample> out;
  out.reserve(cfg.clients);
  for (std::size_t k = 0; k < cfg.clients; ++k) {
    Rng rng = client_rng(cfg.seed, k);
    const ClientParams p = draw_params(cfg, rng);
    const bool shift_scale = cfg.model == Model::B || cfg.model == Model::D;
    const bool shift_mean = cfg.model == Model::C || cfg.model == Model::D;
    std::vector<double> y_mean = p.mean;
    std::vector<double> y_sd = p.scale;
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      if (shift_mean) y_mean[j] += p.mean_shift[j];
      // A negative scale gives the same law as its absolute value.
      if (shift_scale) y_sd[j] = std::abs(y_sd[j] + p.scale_shift[j]);
    }
    auto xs = draw_points(cfg.dist, cfg.m, p.mean, p.scale, rng);
    auto ys = draw_points(cfg.dist, cfg.n, y_mean, y_sd, rng);
    out.emplace_back(ClientId{static_cast<std::uint32_t>(k)},
                     transport::PointCloud::uniform(cfg.dim, std::move(xs)),
                     transport::PointCloud::uniform(cfg.dim, std::move(ys)));
  }
  return out;
}

void DriftConfig::validate() const {
  if (clients == 0) throw InvalidArgument("DriftConfig: K must be >= 1");
  if (dim == 0) throw InvalidArgument("DriftConfig: dimension must be >= 1");
  if (m == 0 || n == 0) throw InvalidArgument("DriftConfig: sample sizes must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw InvalidArgument("DriftConfig: epsilon must lie in [0, 1]");
  if (!components.empty()) {
    if (components.size() != clients)
      throw InvalidArgument("DriftConfig: need one component per client");
    for (const auto& c : components) {
      if (c.mean.size() != dim) throw InvalidArgument("DriftConfig: component dimension mismatch");
      if (!(c.sd > 0.0)) throw InvalidArgument("DriftConfig: component sd must be positive");
    }
  }
}

std::vector<Component> default_components(std::size_t clients, std::size_t dim) {
  std::vector<Component> out(clients);
  for (std::size_t k = 0; k < clients; ++k) {
    out[k].mean.assign(dim, 0.0);
    const double t = static_cast<double>(k);
    const double radius = 0.4 + 0.12 * t;
    const double angle = 0.9 * t;
    out[k].mean[0] = radius * std::cos(angle);
    if (dim > 1) out[k].mean[1] = radius * std::sin(angle);
    out[k].sd = 1.0;
  }
  return out;
}

std::vector<ClientSample> sample_drift(const DriftConfig& cfg) {
  cfg.validate();
  const auto components = cfg.components.empty() ? default_components(cfg.clients, cfg.dim)
                                                  : cfg.components;
  std::vector<ClientSample> out;
  out.reserve(cfg.clients);
  for (std::size_t k = 0; k < cfg.clients; ++k) {
    Rng rng = client_rng(cfg.seed, k);
    std::normal_distribution<double> unit;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> any_component(0, cfg.clients - 1);
    auto draw_from = [&](const Component& c, std::vector<double>& dst) {
      for (std::size_t j = 0; j < cfg.dim; ++j) dst.push_back(c.mean[j] + c.sd * unit(rng));
    };
    std::vector<double> xs, ys;
    xs.reserve(cfg.m * cfg.dim);
    ys.reserve(cfg.n * cfg.dim);
    for (std::size_t i = 0; i < cfg.m; ++i) draw_from(components[k], xs);
    for (std::size_t i = 0; i < cfg.n; ++i) {
      // Both draws are always consumed so the stream layout is independent
      // of epsilon.
      const double u = coin(rng);
      const std::size_t other = any_component(rng);
      draw_from(u < cfg.epsilon ? components[k] : components[other], ys);
    }
    out.emplace_back(ClientId{static_cast<std::uint32_t>(k)},
                     transport::PointCloud::uniform(cfg.dim, std::move(xs)),
                     transport::PointCloud::uniform(cfg.dim, std::move(ys)));
  }
  return out;
}

}  // namespace itd::synth
