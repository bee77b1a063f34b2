// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "fusecast/compositor.hpp"

namespace fusecast {

/// Per-subscriber bounded queue. When full, the oldest frame is discarded so a slow reader
/// never holds up the producer.
class Subscription {
public:
    struct Item {
        FusedFramePtr frame;
        Micros published_at = 0; // host monotonic clock
    };

    explicit Subscription(std::size_t depth) : depth_(depth) {}

    /// nullopt on timeout or once closed and drained.
    std::optional<Item> next(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;

    std::uint64_t delivered() const;
    std::uint64_t dropped() const;

private:
    friend class FrameFeed;
    void push(Item item);

    const std::size_t depth_;
    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<Item> queue_;
    bool closed_ = false;
    std::uint64_t delivered_ = 0;
    std::uint64_t dropped_ = 0;
};

/// One producer (the fusion loop) fanning out to any number of subscribers.
class FrameFeed {
public:
    explicit FrameFeed(std::size_t depth = 2) : depth_(depth) {}

    void publish(FusedFramePtr frame);
    std::shared_ptr<Subscription> subscribe();
    FusedFramePtr latest() const;
    /// Blocks until a frame with seq >= min_seq is published; nullptr on timeout.
    FusedFramePtr wait_for(std::uint64_t min_seq, std::chrono::milliseconds timeout) const;
    std::size_t subscriber_count() const;
    void close();

private:
    const std::size_t depth_;
    mutable std::mutex mutex_;
    mutable std::condition_variable published_;
    std::vector<std::shared_ptr<Subscription>> subs_;
    FusedFramePtr latest_;
    bool closed_ = false;
};

} // namespace fusecast
