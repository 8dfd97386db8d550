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
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "itd/protocol/framing.hpp"

namespace itd::protocol {

class ChannelClosed : public Error {
 public:
  using Error::Error;
};

/// Duplex, ordered, reliable stream of frames between two endpoints. Each
/// sent payload is delivered exactly once, in send order.
class Channel {
 public:
  virtual ~Channel() = default;

  /// Sends one payload as one frame. Throws ChannelClosed if the peer is gone.
  virtual void send(std::span<const std::uint8_t> payload) = 0;
  /// Next payload, or nullopt on timeout. Throws ChannelClosed once the peer
  /// has closed and nothing is left to read.
  virtual std::optional<Bytes> receive(std::chrono::milliseconds timeout) = 0;
  virtual void close() = 0;

  void send_message(const Message& msg) { send(encode(msg)); }
  std::optional<Message> receive_message(std::chrono::milliseconds timeout) {
    auto payload = receive(timeout);
    if (!payload) return std::nullopt;
    return decode(*payload);
  }
};

/// In-process transport: two endpoints joined by a pair of byte streams.
/// Frames are length-prefixed on the way in and reassembled on the way out,
/// the same as over a socket.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_loopback_pair();

/// TCP stream socket carrying length-prefixed frames.
class SocketChannel final : public Channel {
 public:
  explicit SocketChannel(int fd);
  ~SocketChannel() override;
  SocketChannel(const SocketChannel&) = delete;
  SocketChannel& operator=(const SocketChannel&) = delete;

  void send(std::span<const std::uint8_t> payload) override;
  std::optional<Bytes> receive(std::chrono::milliseconds timeout) override;
  void close() override;

 private:
  int fd_;
  FrameReader reader_;
  bool peer_closed_ = false;
};

std::unique_ptr<SocketChannel> connect_tcp(const std::string& host, std::uint16_t port,
                                           std::chrono::milliseconds timeout);

class TcpListener {
 public:
  /// Port 0 picks an ephemeral port; see port().
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  /// nullptr on timeout.
  std::unique_ptr<SocketChannel> accept(std::chrono::milliseconds timeout);

 private:
  int fd_;
  std::uint16_t port_;
};

}  // namespace itd::protocol
