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

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "itd/protocol/channel.hpp"

namespace itd::protocol {

enum class Direction { kToClient, kToCoordinator, kEmitted };

struct TranscriptEntry {
  Direction direction;
  std::optional<ClientId> client;
  Bytes payload;
};

/// Thread-safe log of every frame a coordinator exchanges, optionally
/// streamed to a JSON-lines file as it is recorded.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(const std::filesystem::path& dump_path);

  void record(Direction dir, std::optional<ClientId> client, std::span<const std::uint8_t> payload);
  std::vector<TranscriptEntry> entries() const;
  std::size_t count(std::string_view tag) const;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
  std::unique_ptr<std::ofstream> dump_;
};

/// Channel decorator recording traffic into a Transcript.
class RecordingChannel final : public Channel {
 public:
  RecordingChannel(Channel& inner, Transcript& transcript, ClientId peer)
      : inner_(inner), transcript_(transcript), peer_(peer) {}

  void send(std::span<const std::uint8_t> payload) override;
  std::optional<Bytes> receive(std::chrono::milliseconds timeout) override;
  void close() override { inner_.close(); }

 private:
  Channel& inner_;
  Transcript& transcript_;
  ClientId peer_;
};

/// Schema check of one frame for the privacy invariant: the frame must
/// decode, and every field must be one of the scalar/count/id/seed fields
/// its message type allows. Returns a description of the first violation.
std::optional<std::string> audit_frame(std::span<const std::uint8_t> payload);

/// Audits every frame; returns all violations found.
std::vector<std::string> audit_transcript(const Transcript& transcript);

/// Parses a transcript dump written by Transcript(path).
std::vector<TranscriptEntry> read_transcript_dump(const std::filesystem::path& path);

}  // namespace itd::protocol
