// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "fusecast/channel_model.hpp"
#include "fusecast/clock.hpp"
#include "fusecast/image.hpp"
#include "fusecast/source.hpp"

namespace fusecast {

enum class LayoutMode { grid, focus };

struct LayoutRequest {
    LayoutMode mode = LayoutMode::grid;
    ChannelId focus; // meaningful in focus mode only
    friend bool operator==(const LayoutRequest&, const LayoutRequest&) = default;
};

struct DisplayBoard {
    ChannelId channel;
    Rect rect;
    bool visible = true;
    friend bool operator==(const DisplayBoard&, const DisplayBoard&) = default;
};

struct ControlGroup {
    ChannelId channel;
    bool selected = false;
    bool stale = false;
    bool enabled = true;
};

struct CanvasLayout {
    LayoutRequest request;
    std::vector<DisplayBoard> boards; // visible boards only, in channel order
    int overlay_height = 0;
};

struct ChannelProvenance {
    ChannelId channel;
    std::uint64_t source_seq = 0;
    Micros capture_ts = 0;
    Rect rect;
    friend bool operator==(const ChannelProvenance&, const ChannelProvenance&) = default;
};

/// One capture of both canvases. Immutable once emitted.
struct FusedFrame {
    std::uint64_t frame_seq = 0;
    Micros composite_ts = 0;
    Image image;
    std::vector<ChannelProvenance> channels;
};

using FusedFramePtr = std::shared_ptr<const FusedFrame>;

/// Tiles for n boards: cols = ceil(sqrt n), rows = ceil(n / cols), filling the video region
/// (canvas_h - overlay_height tall) left to right, top to bottom.
std::vector<Rect> grid_layout(int n, int canvas_w, int canvas_h, int overlay_height);

struct CompositorOptions {
    /// Height of the interaction strip at the bottom of the frame; negative selects canvas_h / 10.
    int overlay_height = -1;
    /// A channel is flagged stale when its frame is older than this multiple of its measured period.
    double stale_periods = 2.0;
    /// Older frames are replaced by a placeholder and dropped from provenance.
    Micros placeholder_after_us = 5'000'000;
};

inline constexpr Rgb kBackground{24, 24, 24};
inline constexpr Rgb kPlaceholder{48, 48, 56};

/// The recording area: last-value registers per channel, the video canvas of display boards
/// and the interaction strip of control groups, captured together into one FusedFrame per tick.
///
/// Display boards are drawn when their frame arrives; capture() copies the canvas as it stands.
/// ingest() may be called from any number of producer threads. capture() and the layout
/// mutators may run on different threads; a mutation staged before capture() takes its frame
/// sequence number is reflected in that frame, and the mutator returns exactly that number.
class Compositor {
public:
    explicit Compositor(SceneConfig scene, CompositorOptions options = {});
    ~Compositor();

    const SceneConfig& scene() const { return scene_; }
    int overlay_height() const { return overlay_height_; }
    int video_height() const { return scene_.canvas_height() - overlay_height_; }

    /// Keeps the frame if it is newer (by seq) than the register's. Frames for channels without
    /// a board are dropped and counted. `fitted` is an optional copy already resampled to the
    /// board size; capture() copies it instead of sampling the frame when the sizes agree.
    bool ingest(FramePtr frame, std::shared_ptr<const Image> fitted = nullptr);
    /// Nearest-neighbour copy of the frame at the size of its board in the pending layout.
    /// Null when the board is hidden or the frame already has that size.
    std::shared_ptr<const Image> fit_to_board(const Frame& frame) const;
    std::uint64_t dropped_unknown() const { return dropped_unknown_.load(); }
    /// Current register content, without consuming it.
    FramePtr latest(ChannelId channel) const;

    FusedFramePtr capture(Micros tick_ts);

    /// Throws Error(InvalidLayout) for a focus on a channel without a board.
    std::uint64_t apply_layout(const LayoutRequest& request);
    /// Throws Error(UnknownChannel).
    std::uint64_t toggle_visibility(ChannelId channel);
    /// Marks the channel's control group selected (and every other one unselected).
    std::uint64_t select(ChannelId channel);

    std::uint64_t next_frame_seq() const;
    /// Layout that the next capture will use.
    CanvasLayout pending_layout() const;
    std::vector<ControlGroup> control_groups() const;

private:
    struct Register {
        mutable std::mutex mutex;
        FramePtr frame;
        Micros period_us = 0;
    };

    struct State {
        LayoutRequest layout;
        std::array<bool, kMaxDevices> visible{};
        std::optional<ChannelId> selected;
    };

    CanvasLayout layout_for(const State& s) const;
    void refresh_pending_rects(); // state_mutex_ held
    void render_overlay(Image& img, const State& s, const std::array<bool, kMaxDevices>& stale) const;
    void blit_scaled(Image& dst, const Rect& rect, const Image& src) const;
    // Caller holds the channel's register lock.
    void draw_board(const Rect& rect, const Frame& frame, const Image* fitted);

    SceneConfig scene_;
    CompositorOptions options_;
    int overlay_height_;
    Micros default_period_us_;
    std::array<bool, kMaxDevices> has_board_{};
    std::array<bool, kMaxDevices> group_enabled_{};
    std::array<bool, kMaxDevices> has_group_{};
    std::unique_ptr<Register[]> registers_;
    std::atomic<std::uint64_t> dropped_unknown_{0};

    mutable std::mutex state_mutex_;
    State staged_;
    std::uint64_t next_seq_ = 0;
    std::array<Rect, kMaxDevices> pending_rects_{};
    std::uint64_t layout_version_ = 1;

    // Video canvas as last drawn. Each board's region belongs to its register lock; a redraw
    // for a new layout happens inside capture() with every board lock held.
    Image surface_;
    std::array<Rect, kMaxDevices> surface_rects_{};
    std::uint64_t surface_version_ = 0;
};

/// Per-tick timing reported by the fusion loop.
struct TickStats {
    Micros tick_ts = 0;
    Micros composite_cpu_us = 0;  // CPU time spent inside capture()
    Micros composite_wall_us = 0;
};

/// Drives Compositor::capture at a fixed tick rate on its own thread. Tick k is due at
/// start_at + k / tick_rate; missed ticks are skipped rather than bunched.
class FusionLoop {
public:
    using FrameCallback = std::function<void(const FusedFramePtr&, const TickStats&)>;

    FusionLoop(Compositor& compositor, StreamClock clock, double tick_rate, FrameCallback on_frame);
    ~FusionLoop();
    FusionLoop(const FusionLoop&) = delete;
    FusionLoop& operator=(const FusionLoop&) = delete;

    void start(Micros start_at);
    void stop();
    std::uint64_t ticks() const { return ticks_.load(); }

private:
    void run(Micros start_at);

    Compositor& compositor_;
    StreamClock clock_;
    double tick_rate_;
    FrameCallback on_frame_;
    std::mutex mutex_;
    std::condition_variable wake_;
    bool stop_ = false;
    std::atomic<std::uint64_t> ticks_{0};
    std::thread thread_;
};

} // namespace fusecast
