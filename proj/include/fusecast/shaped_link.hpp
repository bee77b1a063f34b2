// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <mutex>

#include "fusecast/clock.hpp"

namespace fusecast {

/// In-process token bucket shared by every writer that sends through the same emulated link.
/// Writers reserve bytes in arrival order and sleep until their reservation is covered, so
/// concurrent senders interleave at chunk granularity.
class ShapedLink {
public:
    /// burst_bytes caps the bucket; base_delay is added once per frame by the sender.
    ShapedLink(double bytes_per_second, double burst_bytes, Micros base_delay_us = 0);

    void acquire(std::size_t bytes);

    double bandwidth() const { return rate_; }
    double burst() const { return burst_; }
    Micros base_delay_us() const { return base_delay_; }

private:
    const double rate_;
    const double burst_;
    const Micros base_delay_;
    std::mutex mutex_;
    double tokens_;
    Micros last_refill_;
};

} // namespace fusecast
