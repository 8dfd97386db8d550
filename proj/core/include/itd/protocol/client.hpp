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
#include <optional>
#include <vector>

#include "itd/kernel_distance.hpp"
#include "itd/protocol/channel.hpp"

namespace itd::protocol {

/// A data-holding client. Raw points never leave this object; replies carry
/// only the local statistic, sample counts and permuted statistics.
class ClientEndpoint {
 public:
  explicit ClientEndpoint(ClientSample sample) : sample_(std::move(sample)) {}

  ClientId id() const noexcept { return sample_.id(); }
  const ClientSample& sample() const noexcept { return sample_; }

  /// Replies to one message. SelectClients is acknowledged silently; a
  /// ComputeRequest yields LocalResult then PermutedBatchMsg. Throws
  /// ProtocolError for requests addressed elsewhere, B_k = 0, or p != 2.
  std::vector<Message> handle(const Message& msg);

  /// Serves one coordinator connection until it closes. A malformed request
  /// closes the channel, which the coordinator sees as a failed client.
  void serve(Channel& channel, std::chrono::milliseconds idle_timeout);

  /// Weight last announced by the coordinator, if any.
  const std::optional<double>& assigned_weight() const noexcept { return weight_; }

 private:
  ClientSample sample_;
  std::optional<double> weight_;
};

}  // namespace itd::protocol
