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
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "itd/protocol/message.hpp"

namespace itd::protocol {

/// Frames: 4-byte big-endian payload length, then the payload.
inline constexpr std::size_t kFrameHeaderSize = 4;
inline constexpr std::size_t kMaxFrameSize = 64u << 20;

class FramingError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

Bytes frame(std::span<const std::uint8_t> payload);

/// Splits exactly one frame off a complete buffer. Throws FramingError if
/// the buffer is truncated, carries trailing bytes, or declares an
/// oversized length.
Bytes unframe(std::span<const std::uint8_t> buffer);

/// Incremental reassembly of frames from a byte stream. A partial frame
/// stays buffered until the rest arrives, so a short read never loses
/// the stream position.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete payload, if one is buffered. Throws FramingError on an
  /// oversized length header.
  std::optional<Bytes> next();
  std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  std::deque<std::uint8_t> buffer_;
};

}  // namespace itd::protocol
