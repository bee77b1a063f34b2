// SPDX-License-Identifier: Apache-2.0
#include "fusecast/mjpeg_bridge.hpp"

#include <sstream>

#include "httplib.h"

#include "fusecast/jpeg.hpp"

namespace fusecast {

nlohmann::json frame_meta_json(const FusedFrame& frame)
{
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& c : frame.channels) {
        channels.push_back({{"channel", c.channel.value()},
                            {"source_seq", c.source_seq},
                            {"capture_ts_us", c.capture_ts},
                            {"rect", {{"x", c.rect.x}, {"y", c.rect.y}, {"w", c.rect.w}, {"h", c.rect.h}}}});
    }
    return {{"frame_seq", frame.frame_seq},
            {"composite_ts_us", frame.composite_ts},
            {"width", frame.image.width},
            {"height", frame.image.height},
            {"channels", channels}};
}

MjpegBridge::MjpegBridge(FrameFeed& feed, ControlPlane* control, const std::string& host, std::uint16_t port,
                         int jpeg_quality)
    : feed_(feed), control_(control), quality_(jpeg_quality), server_(std::make_unique<httplib::Server>())
{
    server_->Get("/meta", [this](const httplib::Request&, httplib::Response& res) {
        auto latest = feed_.latest();
        if (!latest) {
            res.status = 503;
            res.set_content(R"({"error":"no frame yet"})", "application/json");
            return;
        }
        res.set_header("Cache-Control", "no-store");
        res.set_content(frame_meta_json(*latest).dump(), "application/json");
    });

    server_->Get("/stream", [this](const httplib::Request&, httplib::Response& res) {
        auto sub = feed_.subscribe();
        res.set_header("Cache-Control", "no-store");
        res.set_chunked_content_provider(
            std::string("multipart/x-mixed-replace; boundary=") + kMultipartBoundary,
            [this, sub](std::size_t, httplib::DataSink& sink) {
                while (!stopping_) {
                    auto item = sub->next(std::chrono::milliseconds(250));
                    if (!item) {
                        if (sub->closed()) {
                            break;
                        }
                        if (!sink.is_writable()) {
                            break;
                        }
                        continue;
                    }
                    auto jpeg = jpeg_for(item->frame);
                    std::ostringstream head;
                    head << "--" << kMultipartBoundary << "\r\nContent-Type: image/jpeg\r\nContent-Length: "
                         << jpeg->size() << "\r\nX-Frame-Seq: " << item->frame->frame_seq << "\r\n\r\n";
                    auto h = head.str();
                    if (!sink.write(h.data(), h.size()) ||
                        !sink.write(reinterpret_cast<const char*>(jpeg->data()), jpeg->size()) || !sink.write("\r\n", 2)) {
                        break;
                    }
                    return true;
                }
                sub->close();
                sink.done();
                return false;
            },
            [sub](bool) { sub->close(); });
    });

    server_->Post("/control", [this](const httplib::Request& req, httplib::Response& res) {
        if (control_ == nullptr) {
            res.status = 404;
            return;
        }
        ControlPlane::Session session;
        std::istringstream in(req.body);
        std::string line, out;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty()) {
                continue;
            }
            out += control_->handle_message(session, line);
            out += '\n';
        }
        res.set_content(out, "application/x-ndjson");
    });

    int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound <= 0) {
        throw Error(ErrorCode::BindFailure, "http " + host + ":" + std::to_string(port));
    }
    port_ = static_cast<std::uint16_t>(bound);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

MjpegBridge::~MjpegBridge() { stop(); }

void MjpegBridge::stop()
{
    if (stopping_.exchange(true)) {
        return;
    }
    server_->stop();
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::shared_ptr<const std::vector<std::uint8_t>> MjpegBridge::jpeg_for(const FusedFramePtr& frame)
{
    {
        std::lock_guard lock(cache_mutex_);
        if (cached_seq_ == frame->frame_seq) {
            return cached_jpeg_;
        }
    }
    auto jpeg = std::make_shared<const std::vector<std::uint8_t>>(encode_jpeg(frame->image, quality_));
    std::lock_guard lock(cache_mutex_);
    if (cached_seq_ == UINT64_MAX || frame->frame_seq > cached_seq_) {
        cached_seq_ = frame->frame_seq;
        cached_jpeg_ = jpeg;
    }
    return jpeg;
}

} // namespace fusecast
