// SPDX-License-Identifier: Apache-2.0
#include "fusecast/stream_server.hpp"

#include "fusecast/error.hpp"
#include "fusecast/jpeg.hpp"

namespace fusecast {

namespace {
constexpr std::size_t kChunk = 64 * 1024;
}

StreamServer::StreamServer(FrameFeed& feed, StreamClock clock, StreamServerOptions options)
    : feed_(feed), clock_(clock), options_(std::move(options)),
      listener_(net::TcpListener::bind(options_.host, options_.port))
{
    accept_thread_ = std::thread(&StreamServer::accept_loop, this);
}

StreamServer::~StreamServer() { stop(); }

void StreamServer::stop()
{
    if (stopping_.exchange(true)) {
        return;
    }
    listener_.shutdown();
    if (accept_thread_.joinable()) {
        accept_thread_.join();
    }
    std::list<std::unique_ptr<Session>> sessions;
    {
        std::lock_guard lock(sessions_mutex_);
        sessions.swap(sessions_);
    }
    for (auto& s : sessions) {
        if (s->sub) {
            s->sub->close();
        }
        s->stream.shutdown();
    }
    for (auto& s : sessions) {
        if (s->thread.joinable()) {
            s->thread.join();
        }
    }
}

std::size_t StreamServer::active_sessions() const
{
    std::lock_guard lock(sessions_mutex_);
    std::size_t n = 0;
    for (const auto& s : sessions_) {
        n += s->done ? 0 : 1;
    }
    return n;
}

void StreamServer::accept_loop()
{
    while (!stopping_) {
        auto conn = listener_.accept();
        if (!conn) {
            break;
        }
        accepted_.fetch_add(1);
        std::lock_guard lock(sessions_mutex_);
        // Reap finished sessions.
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if ((*it)->done) {
                (*it)->thread.join();
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
        if (stopping_) {
            break;
        }
        auto s = std::make_unique<Session>();
        s->stream = std::move(*conn);
        auto* raw = s.get();
        sessions_.push_back(std::move(s));
        raw->thread = std::thread(&StreamServer::run_session, this, std::ref(*raw));
    }
}

bool StreamServer::send_frame(Session& s, const FusedFrame& frame, wire::PixelFormat format)
{
    std::vector<std::uint8_t> jpeg;
    std::span<const std::uint8_t> payload = frame.image.pixels;
    if (format == wire::PixelFormat::jpeg) {
        jpeg = encode_jpeg(frame.image, options_.jpeg_quality);
        payload = jpeg;
    }
    auto header = wire::encode_header(wire::make_header(frame, format, static_cast<std::uint32_t>(payload.size())));
    if (!options_.link) {
        return s.stream.write_all(header) && s.stream.write_all(payload);
    }
    // Shaped path: every byte passes the shared token bucket in chunks.
    auto paced = [&](std::span<const std::uint8_t> bytes) {
        for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
            auto part = bytes.subspan(off, std::min(kChunk, bytes.size() - off));
            options_.link->acquire(part.size());
            if (!s.stream.write_all(part)) {
                return false;
            }
        }
        return true;
    };
    return paced(header) && paced(payload);
}

void StreamServer::run_session(Session& s)
{
    try {
        s.stream.set_read_timeout(std::chrono::milliseconds(5000));
        auto msg = wire::read_message(s.stream);
        if (!msg || !std::holds_alternative<wire::Subscribe>(*msg)) {
            s.done = true;
            return;
        }
        auto format = std::get<wire::Subscribe>(*msg).pixel_format;
        s.sub = feed_.subscribe();
        if (stopping_) {
            s.sub->close();
        }
        auto info = wire::encode_stream_info({static_cast<std::uint64_t>(clock_.epoch())});
        if (!s.stream.write_all(info)) {
            s.sub->close();
            s.done = true;
            return;
        }
        const Micros base_delay = options_.link ? options_.link->base_delay_us() : 0;
        while (!stopping_) {
            auto item = s.sub->next(std::chrono::milliseconds(200));
            if (!item) {
                if (s.sub->closed()) {
                    break;
                }
                continue;
            }
            if (base_delay > 0) {
                std::this_thread::sleep_until(
                    std::chrono::steady_clock::time_point(std::chrono::microseconds(item->published_at + base_delay)));
            }
            if (!send_frame(s, *item->frame, format)) {
                break;
            }
            frames_sent_.fetch_add(1);
        }
    } catch (const std::exception&) {
        // A failing session only closes itself.
    }
    if (s.sub) {
        s.sub->close();
    }
    s.stream.shutdown();
    s.done = true;
}

StreamClient StreamClient::connect(const std::string& host, std::uint16_t port, wire::PixelFormat format)
{
    auto stream = net::TcpStream::connect(host, port);
    if (!stream.write_all(wire::encode_subscribe({format}))) {
        throw Error(ErrorCode::ConnectFailure, "subscribe failed");
    }
    stream.set_read_timeout(std::chrono::milliseconds(5000));
    std::optional<wire::Message> msg;
    try {
        msg = wire::read_message(stream);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConnectFailure, e.what());
    }
    if (!msg || !std::holds_alternative<wire::StreamInfo>(*msg)) {
        throw Error(ErrorCode::ConnectFailure, "server did not send stream info");
    }
    StreamClock clock(static_cast<Micros>(std::get<wire::StreamInfo>(*msg).epoch_monotonic_us));
    stream.set_read_timeout(std::chrono::milliseconds(0));
    return StreamClient(std::move(stream), clock);
}

std::optional<ReceivedFrame> StreamClient::next()
{
    for (;;) {
        auto msg = wire::read_message(stream_);
        if (!msg) {
            return std::nullopt;
        }
        if (auto* f = std::get_if<wire::DecodedFrame>(&*msg)) {
            ReceivedFrame r;
            r.arrival_ts = clock_.now();
            r.frame = std::move(*f);
            return r;
        }
    }
}

} // namespace fusecast
