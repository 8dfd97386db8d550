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

#include "itd/protocol/message.hpp"

#include <bit>
#include <charconv>
#include <cstring>

namespace itd::protocol {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json doubles_to_json(std::span<const double> xs) {
  json arr = json::array();
  for (double x : xs) arr.push_back(encode_double(x));
  return arr;
}

std::vector<double> doubles_from_json(const json& j) {
  if (!j.is_array()) throw ProtocolError("expected an array of doubles");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(decode_double(item));
  return out;
}

std::uint32_t client_from_json(const json& j) {
  if (!j.is_number_unsigned()) throw ProtocolError("client id must be an unsigned integer");
  const auto v = j.get<std::uint64_t>();
  if (v > UINT32_MAX) throw ProtocolError("client id out of range");
  return static_cast<std::uint32_t>(v);
}

std::size_t count_from_json(const json& j) {
  if (!j.is_number_unsigned()) throw ProtocolError("count must be an unsigned integer");
  return j.get<std::size_t>();
}

const json& field(const json& obj, const char* name) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw ProtocolError(std::string("missing field '") + name + "'");
  return *it;
}

json sizes_to_json(std::span<const std::size_t> xs) { return json(std::vector<std::size_t>(xs.begin(), xs.end())); }

std::vector<std::size_t> sizes_from_json(const json& j) {
  if (!j.is_array()) throw ProtocolError("expected an array of counts");
  std::vector<std::size_t> out;
  for (const auto& v : j) out.push_back(count_from_json(v));
  return out;
}

json body_to_json(const Body& body) {
  return std::visit(
      Overloaded{
          [](const SelectClients& m) {
            json ids = json::array();
            for (ClientId id : m.client_ids) ids.push_back(to_underlying(id));
            return json{{"client_ids", ids}, {"weights", doubles_to_json(m.weights)}};
          },
          [](const ComputeRequest& m) {
            return json{{"client_id", to_underlying(m.client)},
                        {"p", m.p},
                        {"local_permutations", m.local_permutations},
                        {"seed", m.seed}};
          },
          [](const LocalResult& m) {
            return json{{"client_id", to_underlying(m.client)},
                        {"w2_squared", encode_double(m.w2_squared)},
                        {"m", m.m},
                        {"n", m.n}};
          },
          [](const PermutedBatchMsg& m) {
            return json{{"client_id", to_underlying(m.client)},
                        {"stats", doubles_to_json(m.stats)}};
          },
          [](const Verdict& m) { return json{{"report", report_to_json(m.report)}}; },
      },
      body);
}

Body body_from_json(std::string_view tag, const json& j) {
  if (!j.is_object()) throw ProtocolError("message body must be an object");
  if (tag == "SelectClients") {
    SelectClients m;
    const auto& ids = field(j, "client_ids");
    if (!ids.is_array()) throw ProtocolError("client_ids must be an array");
    for (const auto& id : ids) m.client_ids.push_back(ClientId{client_from_json(id)});
    m.weights = doubles_from_json(field(j, "weights"));
    return m;
  }
  if (tag == "ComputeRequest") {
    ComputeRequest m;
    m.client = ClientId{client_from_json(field(j, "client_id"))};
    const auto& p = field(j, "p");
    if (!p.is_number_integer()) throw ProtocolError("p must be an integer");
    m.p = p.get<int>();
    m.local_permutations = count_from_json(field(j, "local_permutations"));
    const auto& seed = field(j, "seed");
    if (!seed.is_number_unsigned()) throw ProtocolError("seed must be an unsigned integer");
    m.seed = seed.get<std::uint64_t>();
    return m;
  }
  if (tag == "LocalResult") {
    LocalResult m;
    m.client = ClientId{client_from_json(field(j, "client_id"))};
    m.w2_squared = decode_double(field(j, "w2_squared"));
    m.m = count_from_json(field(j, "m"));
    m.n = count_from_json(field(j, "n"));
    return m;
  }
  if (tag == "PermutedBatchMsg") {
    PermutedBatchMsg m;
    m.client = ClientId{client_from_json(field(j, "client_id"))};
    m.stats = doubles_from_json(field(j, "stats"));
    return m;
  }
  if (tag == "Verdict") return Verdict{report_from_json(field(j, "report"))};
  throw ProtocolError("unknown message tag '" + std::string(tag) + "'");
}

}  // namespace

std::string_view tag_of(const Body& body) noexcept {
  return std::visit(Overloaded{
                        [](const SelectClients&) { return std::string_view("SelectClients"); },
                        [](const ComputeRequest&) { return std::string_view("ComputeRequest"); },
                        [](const LocalResult&) { return std::string_view("LocalResult"); },
                        [](const PermutedBatchMsg&) { return std::string_view("PermutedBatchMsg"); },
                        [](const Verdict&) { return std::string_view("Verdict"); },
                    },
                    body);
}

std::string encode_double(double v) {
  char buf[19] = {'0', 'x'};
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 16; ++i) {
    const auto nibble = static_cast<unsigned>((bits >> (60 - 4 * i)) & 0xF);
    buf[2 + i] = "0123456789abcdef"[nibble];
  }
  return std::string(buf, 18);
}

double decode_double(const json& j) {
  if (!j.is_string()) throw ProtocolError("double must be encoded as a hex bit pattern string");
  const auto& s = j.get_ref<const std::string&>();
  if (s.size() != 18 || s[0] != '0' || s[1] != 'x')
    throw ProtocolError("malformed double bit pattern '" + s + "'");
  std::uint64_t bits = 0;
  const auto [ptr, ec] = std::from_chars(s.data() + 2, s.data() + s.size(), bits, 16);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ProtocolError("malformed double bit pattern '" + s + "'");
  return std::bit_cast<double>(bits);
}

json report_to_json(const permtest::TestReport& r) {
  json per_client = json::array();
  for (const auto& c : r.observed.per_client)
    per_client.push_back({{"client_id", to_underlying(c.client)}, {"w2_squared", encode_double(c.value)}});
  json batches = json::array();
  for (const auto& b : r.per_client_batches) {
    batches.push_back({{"client_id", to_underlying(b.client)},
                       {"count", b.count},
                       {"mean", encode_double(b.mean)},
                       {"min", encode_double(b.min)},
                       {"max", encode_double(b.max)},
                       {"seed", b.seed}});
  }
  return json{{"observed", encode_double(r.observed.value)},
              {"per_client", per_client},
              {"critical_value", encode_double(r.critical_value)},
              {"p_value", encode_double(r.p_value)},
              {"alpha", encode_double(r.alpha)},
              {"reject", r.reject},
              {"batches", batches},
              {"weights", doubles_to_json(r.weights)},
              {"m_sizes", sizes_to_json(r.m_sizes)},
              {"n_sizes", sizes_to_json(r.n_sizes)},
              {"local_permutations", r.local_permutations},
              {"global_permutations", r.global_permutations},
              {"seed", r.seed}};
}

permtest::TestReport report_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("report must be an object");
  permtest::TestReport r;
  r.observed.value = decode_double(field(j, "observed"));
  for (const auto& c : field(j, "per_client")) {
    r.observed.per_client.push_back(
        {ClientId{client_from_json(field(c, "client_id"))}, decode_double(field(c, "w2_squared"))});
  }
  r.critical_value = decode_double(field(j, "critical_value"));
  r.p_value = decode_double(field(j, "p_value"));
  r.alpha = decode_double(field(j, "alpha"));
  const auto& reject = field(j, "reject");
  if (!reject.is_boolean()) throw ProtocolError("reject must be a boolean");
  r.reject = reject.get<bool>();
  for (const auto& b : field(j, "batches")) {
    permtest::BatchSummary s;
    s.client = ClientId{client_from_json(field(b, "client_id"))};
    s.count = count_from_json(field(b, "count"));
    s.mean = decode_double(field(b, "mean"));
    s.min = decode_double(field(b, "min"));
    s.max = decode_double(field(b, "max"));
    s.seed = field(b, "seed").get<std::uint64_t>();
    r.per_client_batches.push_back(s);
  }
  r.weights = doubles_from_json(field(j, "weights"));
  r.m_sizes = sizes_from_json(field(j, "m_sizes"));
  r.n_sizes = sizes_from_json(field(j, "n_sizes"));
  r.local_permutations = count_from_json(field(j, "local_permutations"));
  r.global_permutations = count_from_json(field(j, "global_permutations"));
  r.seed = field(j, "seed").get<std::uint64_t>();
  return r;
}

Bytes encode(const Message& msg) {
  const json envelope{{"protocol_version", msg.protocol_version},
                      {"run_id", msg.run_id},
                      {"type", tag_of(msg.body)},
                      {"body", body_to_json(msg.body)}};
  const std::string text = envelope.dump();
  return Bytes(text.begin(), text.end());
}

Message decode(std::span<const std::uint8_t> payload) {
  json envelope;
  try {
    envelope = json::parse(payload.begin(), payload.end());
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed payload: ") + e.what());
  }
  if (!envelope.is_object()) throw ProtocolError("payload is not an object");
  try {
    const auto& version = field(envelope, "protocol_version");
    if (!version.is_number_integer()) throw ProtocolError("protocol_version must be an integer");
    Message msg;
    msg.protocol_version = version.get<int>();
    if (msg.protocol_version != kProtocolVersion)
      throw VersionMismatch("protocol version " + std::to_string(msg.protocol_version) +
                            " is not supported (expected " + std::to_string(kProtocolVersion) + ")");
    const auto& run_id = field(envelope, "run_id");
    const auto& type = field(envelope, "type");
    if (!run_id.is_string() || !type.is_string())
      throw ProtocolError("run_id and type must be strings");
    msg.run_id = run_id.get<std::string>();
    msg.body = body_from_json(type.get<std::string>(), field(envelope, "body"));
    return msg;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
}

}  // namespace itd::protocol
