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

#include <condition_variable>
#include <deque>
#include <mutex>

#include "itd/protocol/channel.hpp"

namespace itd::protocol {

namespace {

// One direction of a loopback link.
class ByteStream {
 public:
  void write(std::span<const std::uint8_t> bytes) {
    {
      std::lock_guard lock(mu_);
      if (closed_) throw ChannelClosed("loopback peer closed");
      bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
    }
    cv_.notify_all();
  }

  // Moves whatever is buffered into `reader`; false on timeout.
  bool drain_into(FrameReader& reader, std::chrono::steady_clock::time_point deadline,
                  bool& closed) {
    std::unique_lock lock(mu_);
    cv_.wait_until(lock, deadline, [&] { return !bytes_.empty() || closed_; });
    closed = closed_;
    if (bytes_.empty()) return false;
    std::vector<std::uint8_t> chunk(bytes_.begin(), bytes_.end());
    bytes_.clear();
    lock.unlock();
    reader.feed(chunk);
    return true;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::uint8_t> bytes_;
  bool closed_ = false;
};

class LoopbackChannel final : public Channel {
 public:
  LoopbackChannel(std::shared_ptr<ByteStream> out, std::shared_ptr<ByteStream> in)
      : out_(std::move(out)), in_(std::move(in)) {}
  ~LoopbackChannel() override { close(); }

  void send(std::span<const std::uint8_t> payload) override { out_->write(frame(payload)); }

  std::optional<Bytes> receive(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      if (auto payload = reader_.next()) return payload;
      bool closed = false;
      const bool got = in_->drain_into(reader_, deadline, closed);
      if (got) continue;
      if (closed) throw ChannelClosed("loopback peer closed");
      return std::nullopt;
    }
  }

  void close() override {
    out_->close();
    in_->close();
  }

 private:
  std::shared_ptr<ByteStream> out_;
  std::shared_ptr<ByteStream> in_;
  FrameReader reader_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_loopback_pair() {
  auto a_to_b = std::make_shared<ByteStream>();
  auto b_to_a = std::make_shared<ByteStream>();
  return {std::make_unique<LoopbackChannel>(a_to_b, b_to_a),
          std::make_unique<LoopbackChannel>(b_to_a, a_to_b)};
}

}  // namespace itd::protocol
