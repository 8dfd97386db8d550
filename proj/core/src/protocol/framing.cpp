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

#include "itd/protocol/framing.hpp"

#include <string>

namespace itd::protocol {

namespace {

std::uint32_t read_length(std::uint8_t b0, std::uint8_t b1, std::uint8_t b2, std::uint8_t b3) {
  return (std::uint32_t{b0} << 24) | (std::uint32_t{b1} << 16) | (std::uint32_t{b2} << 8) |
         std::uint32_t{b3};
}

}  // namespace

Bytes frame(std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxFrameSize)
    throw FramingError("payload of " + std::to_string(payload.size()) + " bytes exceeds frame limit");
  const auto len = static_cast<std::uint32_t>(payload.size());
  Bytes out;
  out.reserve(kFrameHeaderSize + payload.size());
  out.push_back(static_cast<std::uint8_t>(len >> 24));
  out.push_back(static_cast<std::uint8_t>(len >> 16));
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bytes unframe(std::span<const std::uint8_t> buffer) {
  if (buffer.size() < kFrameHeaderSize) throw FramingError("truncated frame header");
  const std::uint32_t len = read_length(buffer[0], buffer[1], buffer[2], buffer[3]);
  if (len > kMaxFrameSize) throw FramingError("declared frame length exceeds limit");
  if (buffer.size() < kFrameHeaderSize + len)
    throw FramingError("truncated frame: expected " + std::to_string(len) + " payload bytes, have " +
                       std::to_string(buffer.size() - kFrameHeaderSize));
  if (buffer.size() > kFrameHeaderSize + len) throw FramingError("trailing bytes after frame");
  return Bytes(buffer.begin() + kFrameHeaderSize, buffer.end());
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Bytes> FrameReader::next() {
  if (buffer_.size() < kFrameHeaderSize) return std::nullopt;
  const std::uint32_t len = read_length(buffer_[0], buffer_[1], buffer_[2], buffer_[3]);
  if (len > kMaxFrameSize) throw FramingError("declared frame length exceeds limit");
  if (buffer_.size() < kFrameHeaderSize + len) return std::nullopt;
  Bytes payload(buffer_.begin() + kFrameHeaderSize, buffer_.begin() + kFrameHeaderSize + len);
  buffer_.erase(buffer_.begin(), buffer_.begin() + kFrameHeaderSize + len);
  return payload;
}

}  // namespace itd::protocol
