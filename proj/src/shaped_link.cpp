// SPDX-License-Identifier: Apache-2.0
#include "fusecast/shaped_link.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "fusecast/error.hpp"

namespace fusecast {

ShapedLink::ShapedLink(double bytes_per_second, double burst_bytes, Micros base_delay_us)
    : rate_(bytes_per_second), burst_(burst_bytes), base_delay_(base_delay_us), tokens_(burst_bytes),
      last_refill_(monotonic_us())
{
    if (!(bytes_per_second > 0) || !(burst_bytes > 0)) {
        throw Error(ErrorCode::SetupFailure, "shaped link needs positive bandwidth and burst");
    }
}

void ShapedLink::acquire(std::size_t bytes)
{
    Micros wake_at = 0;
    {
        std::lock_guard lock(mutex_);
        Micros now = monotonic_us();
        tokens_ = std::min(burst_, tokens_ + rate_ * static_cast<double>(now - last_refill_) * 1e-6);
        last_refill_ = now;
        tokens_ -= static_cast<double>(bytes);
        if (tokens_ >= 0) {
            return;
        }
        wake_at = now + static_cast<Micros>(std::ceil(-tokens_ / rate_ * 1e6));
    }
    std::this_thread::sleep_until(std::chrono::steady_clock::time_point(std::chrono::microseconds(wake_at)));
}

} // namespace fusecast
