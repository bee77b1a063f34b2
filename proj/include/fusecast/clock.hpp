// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>

namespace fusecast {

using Micros = std::int64_t;

/// Microseconds on the host monotonic clock (CLOCK_MONOTONIC on Linux), comparable across
/// processes on the same machine.
inline Micros monotonic_us()
{
    using namespace std::chrono;
    return duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count();
}

/// Stream time: monotonic microseconds relative to an epoch fixed when the server starts.
/// All capture, composite and render timestamps in a session are expressed on this axis.
class StreamClock {
public:
    StreamClock() : epoch_(monotonic_us()) {}
    explicit StreamClock(Micros epoch_monotonic_us) : epoch_(epoch_monotonic_us) {}

    Micros now() const { return monotonic_us() - epoch_; }
    Micros epoch() const { return epoch_; }

    std::chrono::steady_clock::time_point to_time_point(Micros stream_us) const
    {
        return std::chrono::steady_clock::time_point(std::chrono::microseconds(epoch_ + stream_us));
    }

private:
    Micros epoch_;
};

/// CPU time consumed by the calling thread.
Micros thread_cpu_us();
/// CPU time consumed by the whole process.
Micros process_cpu_us();

} // namespace fusecast
