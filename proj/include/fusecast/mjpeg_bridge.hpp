// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "fusecast/control.hpp"
#include "fusecast/feed.hpp"

namespace httplib {
class Server;
}

namespace fusecast {

inline constexpr const char* kMultipartBoundary = "fusecastframe";

/// JSON provenance of one fused frame, as served on /meta.
nlohmann::json frame_meta_json(const FusedFrame& frame);

/// HTTP bridge for browsers:
///   GET  /stream   multipart/x-mixed-replace JPEG parts, one per fused frame
///   GET  /meta     provenance of the latest fused frame
///   POST /control  newline-delimited control messages in, one reply line per message out
class MjpegBridge {
public:
    /// Throws Error(BindFailure). `control` may be null, in which case /control answers 404.
    MjpegBridge(FrameFeed& feed, ControlPlane* control, const std::string& host, std::uint16_t port,
                int jpeg_quality = 80);
    ~MjpegBridge();
    MjpegBridge(const MjpegBridge&) = delete;
    MjpegBridge& operator=(const MjpegBridge&) = delete;

    std::uint16_t port() const { return port_; }
    void stop();

private:
    std::shared_ptr<const std::vector<std::uint8_t>> jpeg_for(const FusedFramePtr& frame);

    FrameFeed& feed_;
    ControlPlane* control_;
    int quality_;
    std::unique_ptr<httplib::Server> server_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread thread_;

    std::mutex cache_mutex_;
    std::uint64_t cached_seq_ = UINT64_MAX;
    std::shared_ptr<const std::vector<std::uint8_t>> cached_jpeg_;
};

} // namespace fusecast
