// SPDX-License-Identifier: Apache-2.0
#include "fusecast/clock.hpp"

#include <ctime>

namespace fusecast {

namespace {
Micros read_clock(clockid_t id)
{
    timespec ts{};
    clock_gettime(id, &ts);
    return Micros(ts.tv_sec) * 1'000'000 + ts.tv_nsec / 1000;
}
} // namespace

Micros thread_cpu_us() { return read_clock(CLOCK_THREAD_CPUTIME_ID); }
Micros process_cpu_us() { return read_clock(CLOCK_PROCESS_CPUTIME_ID); }

} // namespace fusecast
