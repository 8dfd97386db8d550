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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "itd/result_table.hpp"
#include "itd/synth.hpp"

namespace itd::harness {

// Desk-scale defaults.
inline constexpr std::size_t kDefaultSampleSize = 100;
inline constexpr std::size_t kDefaultLocalPermutations = 50;
inline constexpr std::size_t kDefaultGlobalPermutations = 500;
inline constexpr std::size_t kDefaultReplications = 200;

/// How each replication's test is executed. All three give identical results.
enum class Execution { kInProcess, kLoopback, kSocket };
std::string_view to_string(Execution e) noexcept;
std::optional<Execution> parse_execution(std::string_view s) noexcept;

struct ExperimentCell {
  synth::ModelConfig model;  // model.seed is ignored; seeds derive from the grid
  double alpha = 0.05;
  std::size_t replications = kDefaultReplications;
  std::size_t local_permutations = kDefaultLocalPermutations;
  std::size_t global_permutations = kDefaultGlobalPermutations;
};

struct ExperimentGrid {
  std::vector<ExperimentCell> cells;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  Execution execution = Execution::kInProcess;
  bool timing = false;  // record wall time per row
};

/// Seed of replication `rep` of cell `cell`. Used for both data generation
/// and the test itself (through disjoint derived streams).
std::uint64_t replication_seed(std::uint64_t root, std::size_t cell, std::size_t rep);

/// Runs `count` independent tasks on a bounded pool. Task i must depend only
/// on i. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task);

/// Rejection frequency per cell; every cell must use model A.
ResultTable run_type1(const ExperimentGrid& grid);
/// Same for cells using models B to D.
ResultTable run_power(const ExperimentGrid& grid);

/// Level band used for the type-I check: [alpha / 10, 2.1 alpha].
bool within_level_band(double rate, double alpha) noexcept;

// CLT diagnostic on a closed-form kernel. Client x ~ U(0, 1) compares
// P^x = N(0, 1) with Q^x = N(x, (1 + x / 2)^2), so W_2^2 = 1.25 x^2.

struct CltRow {
  std::size_t clients = 0;
  std::size_t replications = 0;
  bool skipped = false;
  std::string note;
  double ks_distance = 0.0;
  double predicted_variance = 0.0;  // mean of clt_variance over replications
  double empirical_variance = 0.0;  // of sqrt(K) (ITD^2_K - ITD^2)
  double variance_ratio = 0.0;      // empirical / predicted
  bool pass = true;
};

struct CltReport {
  std::uint64_t seed = 0;
  double population_itd2 = 0.0;
  double population_variance = 0.0;
  std::vector<CltRow> rows;
  bool pass() const noexcept;
};

inline constexpr double kCltKsThreshold = 0.10;
inline constexpr double kCltRatioLow = 0.7;
inline constexpr double kCltRatioHigh = 1.3;

CltReport run_clt_check(std::span<const std::size_t> client_counts, std::size_t replications,
                        std::uint64_t seed, std::size_t workers = 1);

// Concentration diagnostic: empirical tail of ITD^2 - E[ITD^2] against the
// large-deviation bound.

enum class Generator { kUniformCube, kNormal };
std::string_view to_string(Generator g) noexcept;
std::optional<Generator> parse_generator(std::string_view s) noexcept;

struct ConcentrationConfig {
  std::size_t clients = 5;
  std::size_t dim = 2;
  std::size_t m = 100;
  std::size_t n = 100;
  std::size_t replications = 1000;
  std::vector<double> thresholds{0.05, 0.1, 0.2};
  Generator generator = Generator::kUniformCube;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct ConcentrationRow {
  double t = 0.0;
  double empirical_tail = 0.0;
  double bound = 0.0;
  double mc_sd = 0.0;  // sqrt(bound (1 - bound) / reps)
  bool pass = true;
};

struct ConcentrationReport {
  ConcentrationConfig config;
  double mean_itd2 = 0.0;  // replication estimate of E[ITD^2]
  double dx = 0.0;
  double dy = 0.0;
  std::vector<ConcentrationRow> rows;
  bool pass() const noexcept;
};

/// Throws InvalidArgument for generators without bounded support.
ConcentrationReport run_concentration_check(const ConcentrationConfig& config);

struct DriftExperiment {
  synth::DriftConfig drift;  // drift.seed is ignored
  double alpha = 0.05;
  std::size_t replications = kDefaultReplications;
  std::size_t local_permutations = kDefaultLocalPermutations;
  std::size_t global_permutations = kDefaultGlobalPermutations;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool timing = false;
};

/// Power of every single-client test and of the integrated test on the same
/// replications. A single-client test reuses that client's permutation batch
/// and the integrated run's aggregation stream, so with K = 1 both columns
/// coincide.
DriftTable run_drift(const DriftExperiment& experiment);

nlohmann::json to_json(const CltReport& report);
nlohmann::json to_json(const ConcentrationReport& report);
std::string to_text(const CltReport& report);
std::string to_text(const ConcentrationReport& report);

/// Kolmogorov-Smirnov distance of a sample to N(0, variance).
double ks_distance_normal(std::vector<double> sample, double variance);

}  // namespace itd::harness
