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

#include "itd/protocol/transcript.hpp"

#include <map>
#include <set>

namespace itd::protocol {

using nlohmann::json;

namespace {

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::kToClient: return "to_client";
    case Direction::kToCoordinator: return "to_coordinator";
    case Direction::kEmitted: return "emitted";
  }
  return "?";
}

Direction parse_direction(const std::string& s) {
  if (s == "to_client") return Direction::kToClient;
  if (s == "to_coordinator") return Direction::kToCoordinator;
  if (s == "emitted") return Direction::kEmitted;
  throw ProtocolError("unknown transcript direction '" + s + "'");
}

// Leaf kinds a field may hold. There is deliberately no kind for a list of
// lists or for plain JSON floats: sample coordinates could only travel as one
// of those.
enum class Kind { kCount, kInteger, kBool, kString, kDouble, kDoubleList, kCountList, kObjectList,
                  kObject };

struct Schema {
  std::map<std::string, Kind, std::less<>> fields;
  std::map<std::string, const Schema*, std::less<>> children;
};

const Schema& schema_for(std::string_view type) {
  static const Schema per_client{{{"client_id", Kind::kCount}, {"w2_squared", Kind::kDouble}}, {}};
  static const Schema batch{{{"client_id", Kind::kCount},
                             {"count", Kind::kCount},
                             {"mean", Kind::kDouble},
                             {"min", Kind::kDouble},
                             {"max", Kind::kDouble},
                             {"seed", Kind::kCount}},
                            {}};
  static const Schema report{{{"observed", Kind::kDouble},
                              {"per_client", Kind::kObjectList},
                              {"critical_value", Kind::kDouble},
                              {"p_value", Kind::kDouble},
                              {"alpha", Kind::kDouble},
                              {"reject", Kind::kBool},
                              {"batches", Kind::kObjectList},
                              {"weights", Kind::kDoubleList},
                              {"m_sizes", Kind::kCountList},
                              {"n_sizes", Kind::kCountList},
                              {"local_permutations", Kind::kCount},
                              {"global_permutations", Kind::kCount},
                              {"seed", Kind::kCount}},
                             {{"per_client", &per_client}, {"batches", &batch}}};
  static const std::map<std::string, Schema, std::less<>> bodies{
      {"SelectClients", {{{"client_ids", Kind::kCountList}, {"weights", Kind::kDoubleList}}, {}}},
      {"ComputeRequest",
       {{{"client_id", Kind::kCount},
         {"p", Kind::kInteger},
         {"local_permutations", Kind::kCount},
         {"seed", Kind::kCount}},
        {}}},
      {"LocalResult",
       {{{"client_id", Kind::kCount}, {"w2_squared", Kind::kDouble}, {"m", Kind::kCount},
         {"n", Kind::kCount}},
        {}}},
      {"PermutedBatchMsg", {{{"client_id", Kind::kCount}, {"stats", Kind::kDoubleList}}, {}}},
      {"Verdict", {{{"report", Kind::kObject}}, {{"report", &report}}}},
  };
  const auto it = bodies.find(type);
  if (it == bodies.end()) throw ProtocolError("unknown message tag '" + std::string(type) + "'");
  return it->second;
}

bool is_hex_double(const json& j) {
  try {
    decode_double(j);
    return true;
  } catch (const ProtocolError&) {
    return false;
  }
}

std::optional<std::string> check(const json& obj, const Schema& schema, const std::string& path) {
  if (!obj.is_object()) return path + ": expected an object";
  for (const auto& [key, value] : obj.items()) {
    const std::string where = path + "." + key;
    const auto f = schema.fields.find(key);
    if (f == schema.fields.end()) return where + ": field not allowed";
    bool ok = false;
    switch (f->second) {
      case Kind::kCount: ok = value.is_number_unsigned(); break;
      case Kind::kInteger: ok = value.is_number_integer(); break;
      case Kind::kBool: ok = value.is_boolean(); break;
      case Kind::kString: ok = value.is_string(); break;
      case Kind::kDouble: ok = is_hex_double(value); break;
      case Kind::kDoubleList:
        ok = value.is_array();
        for (const auto& v : value) ok = ok && is_hex_double(v);
        break;
      case Kind::kCountList:
        ok = value.is_array();
        for (const auto& v : value) ok = ok && v.is_number_unsigned();
        break;
      case Kind::kObjectList: {
        if (!value.is_array()) return where + ": expected a list";
        const Schema* child = schema.children.at(key);
        for (std::size_t i = 0; i < value.size(); ++i) {
          if (auto err = check(value[i], *child, where + "[" + std::to_string(i) + "]")) return err;
        }
        ok = true;
        break;
      }
      case Kind::kObject: {
        if (auto err = check(value, *schema.children.at(key), where)) return err;
        ok = true;
        break;
      }
    }
    if (!ok) return where + ": value has a disallowed shape";
  }
  return std::nullopt;
}

}  // namespace

Transcript::Transcript(const std::filesystem::path& dump_path)
    : dump_(std::make_unique<std::ofstream>(dump_path)) {
  if (!*dump_) throw Error("cannot open transcript file " + dump_path.string());
}

void Transcript::record(Direction dir, std::optional<ClientId> client,
                        std::span<const std::uint8_t> payload) {
  std::lock_guard lock(mu_);
  entries_.push_back({dir, client, Bytes(payload.begin(), payload.end())});
  if (dump_) {
    json line{{"direction", direction_name(dir)},
              {"payload", std::string(payload.begin(), payload.end())}};
    line["client"] = client ? json(to_underlying(*client)) : json(nullptr);
    *dump_ << line.dump() << '\n';
    dump_->flush();
  }
}

std::vector<TranscriptEntry> Transcript::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t Transcript::count(std::string_view tag) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (tag_of(decode(e.payload).body) == tag) ++n;
  }
  return n;
}

void RecordingChannel::send(std::span<const std::uint8_t> payload) {
  transcript_.record(Direction::kToClient, peer_, payload);
  inner_.send(payload);
}

std::optional<Bytes> RecordingChannel::receive(std::chrono::milliseconds timeout) {
  auto payload = inner_.receive(timeout);
  if (payload) transcript_.record(Direction::kToCoordinator, peer_, *payload);
  return payload;
}

std::optional<std::string> audit_frame(std::span<const std::uint8_t> payload) {
  json envelope;
  try {
    envelope = json::parse(payload.begin(), payload.end());
  } catch (const json::parse_error&) {
    return "frame is not valid JSON";
  }
  if (!envelope.is_object()) return "frame is not an object";
  static const std::set<std::string, std::less<>> envelope_keys{"protocol_version", "run_id",
                                                                 "type", "body"};
  for (const auto& [key, value] : envelope.items()) {
    if (!envelope_keys.contains(key)) return "envelope field '" + key + "' not allowed";
  }
  const auto type = envelope.find("type");
  const auto body = envelope.find("body");
  if (type == envelope.end() || !type->is_string() || body == envelope.end())
    return "envelope lacks type or body";
  try {
    if (auto err = check(*body, schema_for(type->get<std::string>()), type->get<std::string>()))
      return err;
    decode(payload);
  } catch (const ProtocolError& e) {
    return std::string("frame does not decode: ") + e.what();
  }
  return std::nullopt;
}

std::vector<std::string> audit_transcript(const Transcript& transcript) {
  std::vector<std::string> out;
  const auto entries = transcript.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (auto err = audit_frame(entries[i].payload))
      out.push_back("frame " + std::to_string(i) + ": " + *err);
  }
  return out;
}

std::vector<TranscriptEntry> read_transcript_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open transcript file " + path.string());
  std::vector<TranscriptEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TranscriptEntry e;
    e.direction = parse_direction(j.at("direction").get<std::string>());
    if (!j.at("client").is_null()) e.client = ClientId{j.at("client").get<std::uint32_t>()};
    const auto payload = j.at("payload").get<std::string>();
    e.payload.assign(payload.begin(), payload.end());
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace itd::protocol
