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

#include "itd/protocol/client.hpp"

#include "itd/permtest.hpp"

namespace itd::protocol {

std::vector<Message> ClientEndpoint::handle(const Message& msg) {
  if (const auto* select = std::get_if<SelectClients>(&msg.body)) {
    if (select->client_ids.size() != select->weights.size())
      throw ProtocolError("SelectClients: id and weight counts differ");
    for (std::size_t k = 0; k < select->client_ids.size(); ++k) {
      if (select->client_ids[k] == id()) weight_ = select->weights[k];
    }
    return {};
  }
  const auto* request = std::get_if<ComputeRequest>(&msg.body);
  if (request == nullptr)
    throw ProtocolError("client cannot handle " + std::string(tag_of(msg.body)));
  if (request->client != id())
    throw ProtocolError("ComputeRequest addressed to client " +
                        std::to_string(to_underlying(request->client)));
  if (request->local_permutations == 0) throw ProtocolError("ComputeRequest: B_k must be >= 1");
  if (request->p != 2) throw ProtocolError("ComputeRequest: only p = 2 is supported");

  LocalResult local{id(), kernel::client_w2_squared(sample_), sample_.m(), sample_.n()};
  auto batch = permtest::local_permuted_stats(sample_, request->local_permutations, request->seed);
  std::vector<Message> replies;
  replies.push_back({kProtocolVersion, msg.run_id, local});
  replies.push_back({kProtocolVersion, msg.run_id, PermutedBatchMsg{id(), std::move(batch.stats)}});
  return replies;
}

void ClientEndpoint::serve(Channel& channel, std::chrono::milliseconds idle_timeout) {
  try {
    while (true) {
      auto payload = channel.receive(idle_timeout);
      if (!payload) break;
      for (const auto& reply : handle(decode(*payload))) channel.send_message(reply);
    }
  } catch (const ChannelClosed&) {
    // coordinator finished or went away
  } catch (const Error&) {
    channel.close();
    throw;
  }
}

}  // namespace itd::protocol
