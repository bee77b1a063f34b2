// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "fusecast/clock.hpp"
#include "fusecast/wire.hpp"

namespace fusecast {

struct ClientOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    double duration_s = 10;
    wire::PixelFormat format = wire::PixelFormat::raw_rgb8;
    /// Check every tile's embedded signature against the descriptor that claims it.
    bool verify = false;
    int source_width = 320;
    int source_height = 180;
};

struct ClientSummary {
    std::uint64_t frames = 0;
    std::uint64_t tiles_checked = 0;
    std::uint64_t tiles_mismatched = 0;
    double mean_latency_ms = 0;
    double max_sync_spread_ms = 0;
    std::string first_mismatch;
};

/// Reads the stream for the given duration. Undecodable tiles count as mismatches.
/// Throws Error(ConnectFailure).
ClientSummary run_client(const ClientOptions& options);

} // namespace fusecast
