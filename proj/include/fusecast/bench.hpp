// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fusecast/control.hpp"
#include "fusecast/metrics.hpp"

namespace fusecast {

struct LinkParams {
    double bandwidth_bytes_per_s = 0;
    double burst_bytes = 0; // 0: one 64 KiB write chunk
    Micros base_delay_us = 0;
};

struct BenchOptions {
    int channels = 1;
    double duration_s = 30;
    double warmup_s = 1.0;
    /// Unset: unshaped loopback.
    std::optional<LinkParams> link;
    int canvas_width = 640;
    int canvas_height = 360;
    double tick_rate = 30;
    double source_rate = 30;
    int source_width = 320;
    int source_height = 180;
    double load_interval_s = 1.0;
};

/// One server with n cameras fused into one stream, one subscriber on loopback.
LatencyReport run_fused_bench(const BenchOptions& options);

/// Baseline: one stream per camera at full canvas resolution, one subscriber per stream, all
/// streams sharing the same link.
LatencyReport run_naive_bench(const BenchOptions& options);

/// A running server to drive.
struct ResponseTarget {
    std::string host = "127.0.0.1";
    std::uint16_t stream_port = 0;
    std::uint16_t control_port = 0;
    std::optional<std::string> token;
};

/// Replays `script` `repetitions` times. Each command is preceded by a ping that measures the
/// control round trip.
ResponseReport response_bench(const ResponseTarget& target, const std::vector<ControlCommand>& script,
                              int repetitions, Micros timeout_us = 5'000'000);

struct ResponseBenchOptions {
    int channels = 4;
    int count = 500;
    int canvas_width = 640;
    int canvas_height = 360;
    double tick_rate = 30;
};

/// Starts an in-process server and runs `count` select commands cycling over the channels.
ResponseReport run_response_bench(const ResponseBenchOptions& options);

} // namespace fusecast
