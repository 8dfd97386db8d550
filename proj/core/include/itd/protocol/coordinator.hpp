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

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "itd/permtest.hpp"
#include "itd/protocol/channel.hpp"
#include "itd/protocol/transcript.hpp"

namespace itd::protocol {

inline constexpr std::chrono::milliseconds kDefaultReplyTimeout{30000};

/// A reachable client and the sample sizes it advertised at registration.
struct RegistryEntry {
  ClientId id{};
  std::size_t m = 0;
  std::size_t n = 0;
  Channel* channel = nullptr;
};

struct CoordinatorConfig {
  std::size_t clients = 1;  // K, drawn from the registry
  permtest::TestConfig test;
  std::string run_id = "run";
  std::chrono::milliseconds reply_timeout = kDefaultReplyTimeout;
};

enum class Phase { kSelecting, kCollecting, kAggregating, kDone, kAborted };
std::string_view to_string(Phase p) noexcept;

struct RunOutcome {
  Phase phase = Phase::kSelecting;
  std::vector<ClientId> selected;
  std::optional<permtest::TestReport> report;  // set only when phase == kDone
  std::string abort_reason;
  std::vector<ClientId> missing;  // selected clients without complete results

  bool completed() const noexcept { return phase == Phase::kDone; }
};

/// Seeded uniform choice of k registry positions without replacement, in
/// selection order.
std::vector<std::size_t> select_clients(std::size_t registry_size, std::size_t k,
                                        std::uint64_t seed);

/// Coordinator side of one distributed test. Phases only move forward:
/// Selecting -> Collecting -> Aggregating -> Done, or to Aborted from
/// Collecting. Aggregation needs a LocalResult and a PermutedBatchMsg from
/// every selected client; a partial set never produces a Verdict.
class Coordinator {
 public:
  Coordinator(CoordinatorConfig config, std::vector<RegistryEntry> registry,
              Transcript* transcript = nullptr);

  RunOutcome run();
  Phase phase() const noexcept { return phase_; }

 private:
  struct Slot {
    RegistryEntry entry;
    std::unique_ptr<Channel> recorded;  // transcript decorator, if any
    Channel* channel = nullptr;
    std::optional<LocalResult> local;
    std::optional<PermutedBatchMsg> batch;
    std::uint64_t seed = 0;
  };

  void advance(Phase next);
  RunOutcome abort(std::string reason);
  void collect(Slot& slot);

  CoordinatorConfig config_;
  std::vector<RegistryEntry> registry_;
  Transcript* transcript_;
  Phase phase_ = Phase::kSelecting;
  std::vector<Slot> slots_;
};

/// Convenience wrapper: one run, one outcome.
RunOutcome coordinator_run(const CoordinatorConfig& config, std::vector<RegistryEntry> registry,
                           Transcript* transcript = nullptr);

/// Monolithic reference: the same client selection as the coordinator, then
/// permtest::run_test on the selected clients in selection order. Distributed
/// runs with the same config return an identical report.
permtest::TestReport run_in_process(std::span<const ClientSample> clients, const CoordinatorConfig& config);

/// Spins up one in-process endpoint thread per client, joined to the
/// coordinator by loopback channels, and runs one test.
RunOutcome run_loopback(std::span<const ClientSample> clients, const CoordinatorConfig& config,
                        Transcript* transcript = nullptr);

/// Same over real TCP sockets on 127.0.0.1: every client listens on an
/// ephemeral port in its own thread and the coordinator connects to each.
RunOutcome run_local_sockets(std::span<const ClientSample> clients, const CoordinatorConfig& config,
                             Transcript* transcript = nullptr);

}  // namespace itd::protocol
