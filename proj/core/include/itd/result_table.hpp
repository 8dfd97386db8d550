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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace itd::harness {

/// One experiment cell: rejection frequency over its replications.
struct ResultRow {
  std::string model;
  std::string dist;
  std::size_t clients = 0;  // K
  std::size_t dim = 0;      // d
  std::size_t m = 0;
  std::size_t n = 0;
  double alpha = 0.05;
  std::size_t local_permutations = 0;
  std::size_t global_permutations = 0;
  std::size_t rejections = 0;
  std::size_t replications = 0;
  double rejection_rate = 0.0;
  std::optional<double> wall_time;  // seconds; omitted unless timing is requested

  bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
  std::string experiment;  // "type1" or "power"
  std::uint64_t seed = 0;
  std::string version;
  std::vector<ResultRow> rows;

  bool operator==(const ResultTable&) const = default;
};

/// Per-client and integrated power under synthetic drift.
struct DriftRow {
  std::string label;  // "client <id>" or "ITD"
  std::size_t rejections = 0;
  std::size_t replications = 0;
  double power = 0.0;

  bool operator==(const DriftRow&) const = default;
};

struct DriftTable {
  std::uint64_t seed = 0;
  std::string version;
  std::size_t clients = 0;
  double epsilon = 0.0;
  std::size_t dim = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  double alpha = 0.05;
  std::size_t local_permutations = 0;
  std::size_t global_permutations = 0;
  std::vector<DriftRow> rows;  // clients in id order, then the ITD row
  std::optional<double> wall_time;

  const DriftRow& itd_row() const;
  double max_client_power() const;
  bool operator==(const DriftTable&) const = default;
};

/// Aligned plain-text rendering for a terminal.
std::string to_text(const ResultTable& table);
std::string to_text(const DriftTable& table);

/// CSV with `# key=value` metadata lines ahead of the header row. Doubles use
/// the shortest representation that parses back to the same value.
std::string to_csv(const ResultTable& table);
std::string to_csv(const DriftTable& table);
ResultTable result_table_from_csv(std::string_view text);
DriftTable drift_table_from_csv(std::string_view text);

nlohmann::json to_json(const ResultTable& table);
nlohmann::json to_json(const DriftTable& table);
ResultTable result_table_from_json(const nlohmann::json& j);
DriftTable drift_table_from_json(const nlohmann::json& j);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace itd::harness
