// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fusecast/channel_model.hpp"
#include "fusecast/compositor.hpp"
#include "fusecast/control.hpp"
#include "fusecast/feed.hpp"
#include "fusecast/mjpeg_bridge.hpp"
#include "fusecast/shaped_link.hpp"
#include "fusecast/source.hpp"
#include "fusecast/stream_server.hpp"

namespace fusecast {

enum class SourcePhase {
    /// Source k of n fires so that its frame is (0.1 + 0.8 (k + 0.5) / n) tick periods old at the
    /// tick: the mean sampling age is half a tick for every n.
    spread,
    /// All sources fire with the tick.
    aligned,
};

struct ServerOptions {
    SceneConfig scene;
    std::vector<SourceSpec> sources;
    CompositorOptions compositor;
    SourcePhase phase = SourcePhase::spread;

    std::string host = "127.0.0.1";
    std::optional<std::uint16_t> fuse1_port;   // 0 = ephemeral
    std::optional<std::uint16_t> control_port;
    std::optional<std::uint16_t> http_port;
    std::optional<std::string> token;
    std::shared_ptr<ShapedLink> link;
    int jpeg_quality = 80;

    /// Called on the fusion thread after each capture, before the frame is published.
    FusionLoop::FrameCallback on_frame;
};

/// The streaming side: builds the scene (video canvas with one board per channel, interaction
/// strip with the paired control groups), starts the cameras, runs the fusion loop and exposes
/// the fused stream over the selected transports.
class StreamingServer {
public:
    /// Throws Error(BindFailure) or any scene/source error.
    explicit StreamingServer(ServerOptions options);
    ~StreamingServer();
    StreamingServer(const StreamingServer&) = delete;
    StreamingServer& operator=(const StreamingServer&) = delete;

    void stop();

    const StreamClock& clock() const { return clock_; }
    Compositor& compositor() { return *compositor_; }
    ControlPlane& control_plane() { return *control_; }
    FrameFeed& feed() { return feed_; }
    std::uint64_t ticks() const { return loop_ ? loop_->ticks() : 0; }

    std::optional<std::uint16_t> fuse1_port() const;
    std::optional<std::uint16_t> control_port() const;
    std::optional<std::uint16_t> http_port() const;

    /// CPU time consumed by all source threads so far.
    Micros source_cpu_us() const;
    std::size_t source_count() const { return sources_.size(); }

private:
    ServerOptions options_;
    StreamClock clock_;
    std::unique_ptr<Compositor> compositor_;
    std::unique_ptr<ControlPlane> control_;
    FrameFeed feed_;
    std::vector<std::unique_ptr<SourceHandle>> sources_;
    std::unique_ptr<FusionLoop> loop_;
    std::unique_ptr<StreamServer> stream_;
    std::unique_ptr<ControlServer> control_server_;
    std::unique_ptr<MjpegBridge> bridge_;
    bool stopped_ = false;
};

} // namespace fusecast
