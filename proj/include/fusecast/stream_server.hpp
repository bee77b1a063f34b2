// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "fusecast/clock.hpp"
#include "fusecast/feed.hpp"
#include "fusecast/net.hpp"
#include "fusecast/shaped_link.hpp"
#include "fusecast/wire.hpp"

namespace fusecast {

struct StreamServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    /// Shared emulated link applied on the write path; null means unshaped.
    std::shared_ptr<ShapedLink> link;
    int jpeg_quality = 80;
};

/// FUSE/1 over TCP. Each subscriber gets exactly one connection carrying the fused stream,
/// starting at the frame after it subscribed.
class StreamServer {
public:
    /// Throws Error(BindFailure).
    StreamServer(FrameFeed& feed, StreamClock clock, StreamServerOptions options = {});
    ~StreamServer();
    StreamServer(const StreamServer&) = delete;
    StreamServer& operator=(const StreamServer&) = delete;

    std::uint16_t port() const { return listener_.port(); }
    void stop();

    std::size_t active_sessions() const;
    std::uint64_t sessions_accepted() const { return accepted_.load(); }
    std::uint64_t frames_sent() const { return frames_sent_.load(); }

private:
    struct Session {
        net::TcpStream stream;
        std::shared_ptr<Subscription> sub;
        std::thread thread;
        std::atomic<bool> done{false};
    };

    void accept_loop();
    void run_session(Session& s);
    bool send_frame(Session& s, const FusedFrame& frame, wire::PixelFormat format);

    FrameFeed& feed_;
    StreamClock clock_;
    StreamServerOptions options_;
    net::TcpListener listener_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::uint64_t> accepted_{0};
    std::atomic<std::uint64_t> frames_sent_{0};
    mutable std::mutex sessions_mutex_;
    std::list<std::unique_ptr<Session>> sessions_;
    std::thread accept_thread_;
};

struct ReceivedFrame {
    wire::DecodedFrame frame;
    Micros arrival_ts = 0; // stream clock of the server
};

class StreamClient {
public:
    /// Connects, subscribes and reads the stream info. Throws Error(ConnectFailure).
    static StreamClient connect(const std::string& host, std::uint16_t port,
                                wire::PixelFormat format = wire::PixelFormat::raw_rgb8);

    /// nullopt once the server closes the connection.
    std::optional<ReceivedFrame> next();
    const StreamClock& clock() const { return clock_; }
    void set_read_timeout(std::chrono::milliseconds t) { stream_.set_read_timeout(t); }
    void close() { stream_.shutdown(); }

private:
    StreamClient(net::TcpStream stream, StreamClock clock) : stream_(std::move(stream)), clock_(clock) {}

    net::TcpStream stream_;
    StreamClock clock_;
};

} // namespace fusecast
