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
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "itd/error.hpp"
#include "itd/kernel_distance.hpp"
#include "itd/permtest.hpp"

namespace itd::protocol {

inline constexpr int kProtocolVersion = 1;

using Bytes = std::vector<std::uint8_t>;

class VersionMismatch : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

// Coordinator -> client: who takes part and with what weight.
struct SelectClients {
  std::vector<ClientId> client_ids;
  std::vector<double> weights;
  bool operator==(const SelectClients&) const = default;
};

// Coordinator -> client: compute the local statistic and B_k permutations.
struct ComputeRequest {
  ClientId client{};
  int p = 2;
  std::size_t local_permutations = 0;
  std::uint64_t seed = 0;
  bool operator==(const ComputeRequest&) const = default;
};

// Client -> coordinator. Sample sizes are advertised so the coordinator can
// check them against the weights it assigned.
struct LocalResult {
  ClientId client{};
  double w2_squared = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;
  bool operator==(const LocalResult&) const = default;
};

struct PermutedBatchMsg {
  ClientId client{};
  std::vector<double> stats;
  bool operator==(const PermutedBatchMsg&) const = default;
};

struct Verdict {
  permtest::TestReport report;
  bool operator==(const Verdict&) const = default;
};

using Body = std::variant<SelectClients, ComputeRequest, LocalResult, PermutedBatchMsg, Verdict>;

struct Message {
  int protocol_version = kProtocolVersion;
  std::string run_id;
  Body body;
  bool operator==(const Message&) const = default;
};

std::string_view tag_of(const Body& body) noexcept;

/// Structured JSON payload with explicit field names. Doubles travel as the
/// hex image of their IEEE-754 bits ("0x3fd0000000000000"), so a decode
/// reproduces every value bit for bit.
Bytes encode(const Message& msg);

/// Throws ProtocolError on malformed payloads or unknown tags and
/// VersionMismatch when protocol_version differs from kProtocolVersion.
Message decode(std::span<const std::uint8_t> payload);

// Float codecs shared with report files.
std::string encode_double(double v);
double decode_double(const nlohmann::json& j);

nlohmann::json report_to_json(const permtest::TestReport& report);
permtest::TestReport report_from_json(const nlohmann::json& j);

}  // namespace itd::protocol
