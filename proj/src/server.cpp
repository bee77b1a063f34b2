// SPDX-License-Identifier: Apache-2.0
#include "fusecast/server.hpp"

#include <cmath>

#include "fusecast/error.hpp"

namespace fusecast {

StreamingServer::StreamingServer(ServerOptions options) : options_(std::move(options))
{
    const auto& scene = options_.scene;
    for (const auto& s : options_.sources) {
        if (!scene.has_board(s.channel)) {
            throw Error(ErrorCode::UnknownChannel, "source for channel " + std::to_string(s.channel.value()) +
                                                       " has no display board");
        }
    }
    // Recording area: video canvas with its boards, interaction strip with its control groups.
    compositor_ = std::make_unique<Compositor>(scene, options_.compositor);
    control_ = std::make_unique<ControlPlane>(*compositor_, clock_, options_.token);

    // Cameras, phased relative to the first tick.
    const Micros tick_us = static_cast<Micros>(std::llround(1e6 / scene.tick_rate()));
    const Micros start_at = clock_.now() + 100'000;
    const auto n = static_cast<double>(options_.sources.size());
    for (std::size_t k = 0; k < options_.sources.size(); ++k) {
        SourceTiming timing{start_at, 0};
        if (options_.phase == SourcePhase::spread) {
            double age = 0.1 + 0.8 * (static_cast<double>(k) + 0.5) / n;
            timing.phase = static_cast<Micros>(std::llround((1.0 - age) * static_cast<double>(tick_us)));
        }
        auto* comp = compositor_.get();
        // Each camera thread resamples to its board, so a capture only copies rows.
        sources_.push_back(run_source(options_.sources[k], [comp](FramePtr f) {
            auto fitted = comp->fit_to_board(*f);
            comp->ingest(std::move(f), std::move(fitted));
            return true;
        }, clock_, timing));
    }

    // Fusion loop: one capture of both canvases per tick, published as a single stream.
    loop_ = std::make_unique<FusionLoop>(*compositor_, clock_, scene.tick_rate(),
                                         [this](const FusedFramePtr& f, const TickStats& stats) {
                                             if (options_.on_frame) {
                                                 options_.on_frame(f, stats);
                                             }
                                             feed_.publish(f);
                                         });
    loop_->start(start_at);

    try {
        if (options_.fuse1_port) {
            stream_ = std::make_unique<StreamServer>(
                feed_, clock_, StreamServerOptions{options_.host, *options_.fuse1_port, options_.link, options_.jpeg_quality});
        }
        if (options_.control_port) {
            control_server_ = std::make_unique<ControlServer>(*control_, options_.host, *options_.control_port);
        }
        if (options_.http_port) {
            bridge_ = std::make_unique<MjpegBridge>(feed_, control_.get(), options_.host, *options_.http_port,
                                                    options_.jpeg_quality);
        }
    } catch (...) {
        stop();
        throw;
    }
}

StreamingServer::~StreamingServer() { stop(); }

void StreamingServer::stop()
{
    if (stopped_) {
        return;
    }
    stopped_ = true;
    if (bridge_) {
        bridge_->stop();
    }
    if (control_server_) {
        control_server_->stop();
    }
    if (stream_) {
        stream_->stop();
    }
    if (loop_) {
        loop_->stop();
    }
    for (auto& s : sources_) {
        s->stop();
    }
    feed_.close();
}

std::optional<std::uint16_t> StreamingServer::fuse1_port() const
{
    return stream_ ? std::optional(stream_->port()) : std::nullopt;
}

std::optional<std::uint16_t> StreamingServer::control_port() const
{
    return control_server_ ? std::optional(control_server_->port()) : std::nullopt;
}

std::optional<std::uint16_t> StreamingServer::http_port() const
{
    return bridge_ ? std::optional(bridge_->port()) : std::nullopt;
}

Micros StreamingServer::source_cpu_us() const
{
    Micros total = 0;
    for (const auto& s : sources_) {
        total += s->cpu_us();
    }
    return total;
}

} // namespace fusecast
