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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "itd/kernel_distance.hpp"

namespace itd::synth {

// A: same mean and scale; B: scale shifted; C: mean shifted; D: both.
enum class Model { A, B, C, D };
enum class Distribution { Normal, LogNormal, T5 };

std::string_view to_string(Model m) noexcept;
std::string_view to_string(Distribution d) noexcept;
std::optional<Model> parse_model(std::string_view s) noexcept;
std::optional<Distribution> parse_distribution(std::string_view s) noexcept;

inline constexpr double kDefaultShiftSd = 0.25;

struct ModelConfig {
  Model model = Model::A;
  Distribution dist = Distribution::Normal;
  std::size_t clients = 1;  // K
  std::size_t dim = 2;      // d
  std::size_t m = 100;
  std::size_t n = 100;
  double shift_sd = kDefaultShiftSd;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-client draw of the generator parameters. `scale_shift` only enters
/// Q for models B and D, `mean_shift` only for C and D.
struct ClientParams {
  std::vector<double> mean;         // u_k ~ U(-1, 1)^d
  std::vector<double> scale;        // r_k ~ U(0.8, 1.2)^d
  std::vector<double> scale_shift;  // ~ N(0, shift_sd^2)^d
  std::vector<double> mean_shift;   // ~ N(0, shift_sd^2)^d
};

ClientParams draw_client_params(const ModelConfig& cfg, std::size_t client_index);

/// K clients, ids 0..K-1. Client k's parameters and points come from a seed
/// stream derived from (seed, k) alone.
std::vector<ClientSample> sample_model(const ModelConfig& cfg);

/// One Gaussian mixture component per client.
struct Component {
  std::vector<double> mean;
  double sd = 1.0;
};

struct DriftConfig {
  std::size_t clients = 10;
  double epsilon = 0.8;  // probability a Y point comes from the client's own component
  std::size_t dim = 2;
  std::size_t m = 100;
  std::size_t n = 100;
  std::vector<Component> components;  // empty: default_components(clients, dim)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic component layout: client k centered on a spiral through
/// the first two coordinates, with radius and spacing growing in k so the
/// clients see contamination of varying strength.
std::vector<Component> default_components(std::size_t clients, std::size_t dim);

/// xs: m points from the client's own component. ys: each point from the own
/// component with probability epsilon, otherwise from the uniform mixture of
/// all components.
std::vector<ClientSample> sample_drift(const DriftConfig& cfg);

// CSV ingestion. One point per line after a header row, comma separated.

std::vector<std::vector<double>> read_points_csv(const std::filesystem::path& path);
void write_points_csv(const std::filesystem::path& path, const transport::PointCloud& cloud);

ClientSample load_client_csv(ClientId id, const std::filesystem::path& x_csv,
                             const std::filesystem::path& y_csv);

/// Loads every client_<id>_x.csv / client_<id>_y.csv pair in `dir`, sorted by id.
std::vector<ClientSample> load_clients_dir(const std::filesystem::path& dir);
void write_clients_dir(const std::filesystem::path& dir, const std::vector<ClientSample>& clients);

}  // namespace itd::synth
