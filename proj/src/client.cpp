// SPDX-License-Identifier: Apache-2.0
#include "fusecast/client.hpp"

#include <algorithm>

#include "fusecast/error.hpp"
#include "fusecast/jpeg.hpp"
#include "fusecast/source.hpp"
#include "fusecast/stream_server.hpp"

namespace fusecast {

ClientSummary run_client(const ClientOptions& o)
{
    auto client = StreamClient::connect(o.host, o.port, o.format);
    client.set_read_timeout(std::chrono::milliseconds(1000));
    ClientSummary out;
    double latency_sum = 0;
    std::uint64_t latency_n = 0;
    const Micros end = monotonic_us() + static_cast<Micros>(o.duration_s * 1e6);
    while (monotonic_us() < end) {
        std::optional<ReceivedFrame> rf;
        try {
            rf = client.next();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DecodeFailure) {
                throw;
            }
            continue;
        }
        if (!rf) {
            break;
        }
        ++out.frames;
        const auto& h = rf->frame.header;
        Micros lo = INT64_MAX, hi = INT64_MIN;
        for (const auto& d : h.channels) {
            auto ts = static_cast<Micros>(d.capture_ts_us);
            latency_sum += static_cast<double>(rf->arrival_ts - ts);
            ++latency_n;
            lo = std::min(lo, ts);
            hi = std::max(hi, ts);
        }
        if (!h.channels.empty()) {
            out.max_sync_spread_ms = std::max(out.max_sync_spread_ms, static_cast<double>(hi - lo) / 1000.0);
        }
        if (!o.verify || h.channels.empty()) {
            continue;
        }
        Image canvas = h.pixel_format == wire::PixelFormat::raw_rgb8 ? wire::to_fused(rf->frame).image
                                                                      : decode_jpeg(rf->frame.payload);
        for (const auto& d : h.channels) {
            ++out.tiles_checked;
            Rect r{d.x, d.y, d.w, d.h};
            std::string problem;
            try {
                auto sig = decode_tile(canvas, r, o.source_width, o.source_height);
                if (sig.channel != d.channel_id || sig.seq != static_cast<std::uint32_t>(d.source_seq)) {
                    problem = "tile claims channel " + std::to_string(d.channel_id) + " seq " +
                              std::to_string(d.source_seq) + " but carries channel " + std::to_string(sig.channel) +
                              " seq " + std::to_string(sig.seq);
                }
            } catch (const Error& e) {
                problem = "frame " + std::to_string(h.frame_seq) + " channel " + std::to_string(d.channel_id) + ": " +
                          e.what();
            }
            if (!problem.empty()) {
                ++out.tiles_mismatched;
                if (out.first_mismatch.empty()) {
                    out.first_mismatch = problem;
                }
            }
        }
    }
    client.close();
    out.mean_latency_ms = latency_n ? latency_sum / static_cast<double>(latency_n) / 1000.0 : 0;
    return out;
}

} // namespace fusecast
