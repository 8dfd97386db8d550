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

#include "itd/protocol/coordinator.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "itd/protocol/client.hpp"

namespace itd::protocol {

std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::kSelecting: return "Selecting";
    case Phase::kCollecting: return "Collecting";
    case Phase::kAggregating: return "Aggregating";
    case Phase::kDone: return "Done";
    case Phase::kAborted: return "Aborted";
  }
  return "?";
}

std::vector<std::size_t> select_clients(std::size_t registry_size, std::size_t k,
                                        std::uint64_t seed) {
  if (k == 0 || k > registry_size)
    throw InvalidArgument("select_clients: need 1 <= K <= registry size");
  std::vector<std::size_t> idx(registry_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first k slots are a uniform k-subset in
  // uniformly random order.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, registry_size - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

Coordinator::Coordinator(CoordinatorConfig config, std::vector<RegistryEntry> registry,
                         Transcript* transcript)
    : config_(std::move(config)), registry_(std::move(registry)), transcript_(transcript) {
  if (registry_.empty()) throw InvalidArgument("Coordinator: no reachable clients");
  std::set<std::uint32_t> seen;
  for (const auto& e : registry_) {
    if (!seen.insert(to_underlying(e.id)).second)
      throw InvalidArgument("Coordinator: duplicate client id " + std::to_string(to_underlying(e.id)));
    if (e.channel == nullptr) throw InvalidArgument("Coordinator: registry entry without a channel");
    if (e.m == 0 || e.n == 0) throw InvalidArgument("Coordinator: advertised sizes must be >= 1");
  }
  const auto& t = config_.test;
  if (!(t.alpha > 0.0 && t.alpha < 1.0)) throw InvalidArgument("Coordinator: alpha must be in (0, 1)");
  if (t.local_permutations == 0 || t.global_permutations == 0)
    throw InvalidArgument("Coordinator: B_k and B must be >= 1");
  if (config_.clients == 0 || config_.clients > registry_.size())
    throw InvalidArgument("Coordinator: K must be between 1 and the registry size");
}

void Coordinator::advance(Phase next) {
  if (static_cast<int>(next) <= static_cast<int>(phase_))
    throw Error("Coordinator: phase may only move forward");
  phase_ = next;
}

RunOutcome Coordinator::abort(std::string reason) {
  phase_ = Phase::kAborted;
  RunOutcome out;
  out.phase = phase_;
  out.abort_reason = std::move(reason);
  for (const auto& s : slots_) {
    out.selected.push_back(s.entry.id);
    if (!s.local || !s.batch) out.missing.push_back(s.entry.id);
  }
  return out;
}

void Coordinator::collect(Slot& slot) {
  const std::string who = "client " + std::to_string(to_underlying(slot.entry.id));
  while (!slot.local || !slot.batch) {
    auto payload = slot.channel->receive(config_.reply_timeout);
    if (!payload) throw Error(who + ": timed out waiting for a reply");
    const Message msg = decode(*payload);
    if (msg.run_id != config_.run_id) throw ProtocolError(who + ": reply for another run");
    if (auto* local = std::get_if<LocalResult>(&msg.body)) {
      if (slot.local) throw ProtocolError(who + ": duplicate LocalResult");
      if (local->client != slot.entry.id) throw ProtocolError(who + ": LocalResult from wrong id");
      if (local->m != slot.entry.m || local->n != slot.entry.n)
        throw ProtocolError(who + ": sample sizes differ from the advertised ones");
      if (!std::isfinite(local->w2_squared) || local->w2_squared < 0.0)
        throw ProtocolError(who + ": invalid local statistic");
      slot.local = *local;
    } else if (auto* batch = std::get_if<PermutedBatchMsg>(&msg.body)) {
      if (slot.batch) throw ProtocolError(who + ": duplicate PermutedBatchMsg");
      if (batch->client != slot.entry.id) throw ProtocolError(who + ": batch from wrong id");
      if (batch->stats.size() != config_.test.local_permutations)
        throw ProtocolError(who + ": batch has the wrong number of statistics");
      for (double s : batch->stats) {
        if (!std::isfinite(s) || s < 0.0) throw ProtocolError(who + ": invalid permuted statistic");
      }
      slot.batch = std::move(*batch);
    } else {
      throw ProtocolError(who + ": unexpected " + std::string(tag_of(msg.body)));
    }
  }
}

RunOutcome Coordinator::run() {
  if (phase_ != Phase::kSelecting) throw Error("Coordinator: run() may only be called once");
  const auto& test = config_.test;

  // Step 1: choose K clients and give them weights from advertised sizes.
  const auto picked =
      select_clients(registry_.size(), config_.clients, derive_seed(test.seed, {stream::kSelection}));
  std::vector<std::size_t> m_sizes, n_sizes;
  for (std::size_t idx : picked) {
    Slot slot;
    slot.entry = registry_[idx];
    slot.seed = permtest::client_stream_seed(test.seed, slot.entry.id);
    if (transcript_ != nullptr) {
      slot.recorded = std::make_unique<RecordingChannel>(*slot.entry.channel, *transcript_, slot.entry.id);
      slot.channel = slot.recorded.get();
    } else {
      slot.channel = slot.entry.channel;
    }
    m_sizes.push_back(slot.entry.m);
    n_sizes.push_back(slot.entry.n);
    slots_.push_back(std::move(slot));
  }
  const auto weights = kernel::client_weights(m_sizes, n_sizes);

  advance(Phase::kCollecting);
  SelectClients select;
  for (const auto& s : slots_) select.client_ids.push_back(s.entry.id);
  select.weights.assign(weights.values().begin(), weights.values().end());
  try {
    for (auto& s : slots_) {
      s.channel->send_message({kProtocolVersion, config_.run_id, select});
      s.channel->send_message(
          {kProtocolVersion, config_.run_id, ComputeRequest{s.entry.id, 2, test.local_permutations, s.seed}});
    }
    // Every client is already computing; wait on each in turn (barrier).
    for (auto& s : slots_) collect(s);
  } catch (const Error& e) {
    return abort(e.what());
  }

  advance(Phase::kAggregating);
  kernel::ITDStatistic observed;
  std::vector<double> values;
  std::vector<permtest::PermutationBatch> batches;
  for (auto& s : slots_) {
    values.push_back(s.local->w2_squared);
    observed.per_client.push_back({s.entry.id, s.local->w2_squared});
    batches.push_back({s.entry.id, std::move(s.batch->stats), s.seed});
    s.batch->stats.clear();
  }
  observed.value = kernel::weighted_sum(values, weights);
  auto report = permtest::finish_test(observed, batches, weights, m_sizes, n_sizes, test);

  advance(Phase::kDone);
  if (transcript_ != nullptr) {
    transcript_->record(Direction::kEmitted, std::nullopt,
                        encode({kProtocolVersion, config_.run_id, Verdict{report}}));
  }
  RunOutcome out;
  out.phase = phase_;
  for (const auto& s : slots_) out.selected.push_back(s.entry.id);
  out.report = std::move(report);
  return out;
}

RunOutcome coordinator_run(const CoordinatorConfig& config, std::vector<RegistryEntry> registry,
                           Transcript* transcript) {
  Coordinator coordinator(config, std::move(registry), transcript);
  return coordinator.run();
}

permtest::TestReport run_in_process(std::span<const ClientSample> clients, const CoordinatorConfig& config) {
  std::set<std::uint32_t> seen;
  for (const auto& c : clients) {
    if (!seen.insert(to_underlying(c.id())).second)
      throw InvalidArgument("run_in_process: duplicate client id " + std::to_string(to_underlying(c.id())));
  }
  const auto picked = select_clients(clients.size(), config.clients,
                                     derive_seed(config.test.seed, {stream::kSelection}));
  std::vector<ClientSample> selected;
  selected.reserve(picked.size());
  for (std::size_t idx : picked) selected.push_back(clients[idx]);
  return permtest::run_test(selected, config.test);
}

namespace {

// Joins client threads on scope exit; client-side errors surface to the
// coordinator as a closed channel, so they are not rethrown here.
class ClientThreads {
 public:
  ~ClientThreads() {
    for (auto& t : threads_) t.join();
  }
  template <class F>
  void spawn(F&& f) {
    threads_.emplace_back([fn = std::forward<F>(f)]() mutable {
      try {
        fn();
      } catch (const std::exception&) {
      }
    });
  }

 private:
  std::vector<std::thread> threads_;
};

}  // namespace

RunOutcome run_loopback(std::span<const ClientSample> clients, const CoordinatorConfig& config,
                        Transcript* transcript) {
  std::vector<std::unique_ptr<Channel>> coordinator_ends;
  std::vector<RegistryEntry> registry;
  RunOutcome outcome;
  {
    ClientThreads threads;
    for (const auto& c : clients) {
      auto [coord_end, client_end] = make_loopback_pair();
      registry.push_back({c.id(), c.m(), c.n(), coord_end.get()});
      coordinator_ends.push_back(std::move(coord_end));
      threads.spawn([endpoint = ClientEndpoint(c), ch = std::move(client_end),
                     timeout = config.reply_timeout]() mutable { endpoint.serve(*ch, timeout); });
    }
    try {
      outcome = coordinator_run(config, registry, transcript);
    } catch (...) {
      for (auto& ch : coordinator_ends) ch->close();
      throw;
    }
    for (auto& ch : coordinator_ends) ch->close();
  }
  return outcome;
}

RunOutcome run_local_sockets(std::span<const ClientSample> clients, const CoordinatorConfig& config,
                             Transcript* transcript) {
  std::vector<std::unique_ptr<SocketChannel>> coordinator_ends;
  std::vector<RegistryEntry> registry;
  RunOutcome outcome;
  {
    ClientThreads threads;
    std::vector<std::uint16_t> ports;
    for (const auto& c : clients) {
      auto listener = std::make_shared<TcpListener>("127.0.0.1", 0);
      ports.push_back(listener->port());
      threads.spawn([endpoint = ClientEndpoint(c), listener, timeout = config.reply_timeout]() mutable {
        auto ch = listener->accept(timeout);
        if (ch) endpoint.serve(*ch, timeout);
      });
    }
    try {
      for (std::size_t k = 0; k < clients.size(); ++k) {
        coordinator_ends.push_back(connect_tcp("127.0.0.1", ports[k], config.reply_timeout));
        registry.push_back({clients[k].id(), clients[k].m(), clients[k].n(), coordinator_ends.back().get()});
      }
      outcome = coordinator_run(config, registry, transcript);
    } catch (...) {
      for (auto& ch : coordinator_ends) ch->close();
      throw;
    }
    for (auto& ch : coordinator_ends) ch->close();
  }
  return outcome;
}

}  // namespace itd::protocol
