// SPDX-License-Identifier: Apache-2.0
#include "fusecast/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fusecast/error.hpp"
#include "fusecast/kernels.hpp"

namespace fusecast {

namespace {

constexpr Rgb kGroupIdle{90, 90, 90};
constexpr Rgb kGroupSelected{255, 200, 0};
constexpr Rgb kGroupStale{200, 40, 40};
constexpr Rgb kGroupDisabled{60, 60, 60};

void fill_rect(Image& img, const Rect& r, Rgb colour)
{
    const auto& k = kernels::active();
    for (int y = r.y; y < r.y + r.h; ++y) {
        k.fill_rgb(img.row(y) + static_cast<std::size_t>(r.x) * 3, static_cast<std::size_t>(r.w), colour);
    }
}

// src has exactly the size of r.
void copy_rows(Image& dst, const Rect& r, const Image& src)
{
    const auto bytes = static_cast<std::size_t>(r.w) * 3;
    for (int y = 0; y < r.h; ++y) {
        std::memcpy(dst.row(r.y + y) + static_cast<std::size_t>(r.x) * 3, src.row(y), bytes);
    }
}

} // namespace

std::vector<Rect> grid_layout(int n, int canvas_w, int canvas_h, int overlay_height)
{
    std::vector<Rect> rects;
    if (n <= 0) {
        return rects;
    }
    int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    while ((cols - 1) * (cols - 1) >= n) {
        --cols;
    }
    while (cols * cols < n) {
        ++cols;
    }
    int rows = (n + cols - 1) / cols;
    int tile_w = canvas_w / cols;
    int tile_h = (canvas_h - overlay_height) / rows;
    rects.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rects.push_back({(i % cols) * tile_w, (i / cols) * tile_h, tile_w, tile_h});
    }
    return rects;
}

Compositor::Compositor(SceneConfig scene, CompositorOptions options)
    : scene_(std::move(scene)), options_(options), registers_(new Register[kMaxDevices])
{
    overlay_height_ = options_.overlay_height < 0 ? scene_.canvas_height() / 10 : options_.overlay_height;
    if (overlay_height_ >= scene_.canvas_height()) {
        throw Error(ErrorCode::BadDimensions, "overlay strip must leave room for the video canvas");
    }
    default_period_us_ = static_cast<Micros>(std::llround(1e6 / scene_.tick_rate()));
    surface_ = Image(scene_.canvas_width(), video_height());
    fill_rect(surface_, {0, 0, surface_.width, surface_.height}, kBackground);
    for (const auto& b : scene_.boards()) {
        has_board_[b.channel.value()] = true;
        staged_.visible[b.channel.value()] = b.enabled;
    }
    for (const auto& g : scene_.control_groups()) {
        has_group_[g.channel.value()] = true;
        group_enabled_[g.channel.value()] = g.enabled;
    }
    refresh_pending_rects();
}

Compositor::~Compositor() = default;

bool Compositor::ingest(FramePtr frame, std::shared_ptr<const Image> fitted)
{
    if (!frame || !has_board_[frame->channel.value()]) {
        dropped_unknown_.fetch_add(1);
        return false;
    }
    auto& reg = registers_[frame->channel.value()];
    std::lock_guard lock(reg.mutex);
    if (reg.frame && frame->seq <= reg.frame->seq) {
        return true;
    }
    if (reg.frame && frame->capture_ts > reg.frame->capture_ts) {
        reg.period_us = (frame->capture_ts - reg.frame->capture_ts) / static_cast<Micros>(frame->seq - reg.frame->seq);
    }
    reg.frame = std::move(frame);
    const Rect& rect = surface_rects_[reg.frame->channel.value()];
    if (rect.w > 0 && rect.h > 0) {
        draw_board(rect, *reg.frame, fitted.get());
    }
    return true;
}

std::shared_ptr<const Image> Compositor::fit_to_board(const Frame& frame) const
{
    Rect rect;
    {
        std::lock_guard lock(state_mutex_);
        rect = pending_rects_[frame.channel.value()];
    }
    if (rect.w <= 0 || rect.h <= 0 || (rect.w == frame.image.width && rect.h == frame.image.height)) {
        return nullptr;
    }
    auto out = std::make_shared<Image>(rect.w, rect.h);
    blit_scaled(*out, {0, 0, rect.w, rect.h}, frame.image);
    return out;
}

void Compositor::refresh_pending_rects()
{
    pending_rects_.fill(Rect{});
    for (const auto& b : layout_for(staged_).boards) {
        pending_rects_[b.channel.value()] = b.rect;
    }
}

FramePtr Compositor::latest(ChannelId channel) const
{
    auto& reg = registers_[channel.value()];
    std::lock_guard lock(reg.mutex);
    return reg.frame;
}

CanvasLayout Compositor::layout_for(const State& s) const
{
    CanvasLayout layout;
    layout.request = s.layout;
    layout.overlay_height = overlay_height_;
    if (s.layout.mode == LayoutMode::focus) {
        layout.boards.push_back({s.layout.focus, {0, 0, scene_.canvas_width(), video_height()}, true});
        return layout;
    }
    std::vector<ChannelId> shown;
    for (const auto& b : scene_.boards()) {
        if (s.visible[b.channel.value()]) {
            shown.push_back(b.channel);
        }
    }
    auto rects = grid_layout(static_cast<int>(shown.size()), scene_.canvas_width(), scene_.canvas_height(),
                             overlay_height_);
    for (std::size_t i = 0; i < shown.size(); ++i) {
        layout.boards.push_back({shown[i], rects[i], true});
    }
    return layout;
}

void Compositor::blit_scaled(Image& dst, const Rect& rect, const Image& src) const
{
    if (rect.w <= 0 || rect.h <= 0) {
        return;
    }
    const auto& k = kernels::active();
    std::vector<std::int32_t> offsets(static_cast<std::size_t>(rect.w));
    for (int x = 0; x < rect.w; ++x) {
        offsets[static_cast<std::size_t>(x)] = nearest_src(x, src.width, rect.w) * 3;
    }
    int prev_sy = -1;
    const std::size_t row_bytes = static_cast<std::size_t>(rect.w) * 3;
    for (int y = 0; y < rect.h; ++y) {
        int sy = nearest_src(y, src.height, rect.h);
        std::uint8_t* out = dst.row(rect.y + y) + static_cast<std::size_t>(rect.x) * 3;
        if (sy == prev_sy) {
            std::memcpy(out, out - dst.width * 3, row_bytes);
        } else {
            k.scale_row_nearest(src.row(sy), src.width, offsets.data(), out, rect.w);
        }
        prev_sy = sy;
    }
}

void Compositor::render_overlay(Image& img, const State& s, const std::array<bool, kMaxDevices>& stale) const
{
    const int y0 = video_height();
    const int h = overlay_height_;
    if (h <= 0) {
        return;
    }
    const auto& k = kernels::active();
    const auto width = static_cast<std::size_t>(img.width);
    const std::size_t row_bytes = width * 3;
    const auto& groups = scene_.control_groups();
    if (groups.empty()) {
        fill_rect(img, {0, y0, img.width, h}, kBackground);
        return;
    }

    // Every strip row is one of three patterns: cell body, stale bar, bit blocks.
    std::vector<std::uint8_t> body(row_bytes), bar(row_bytes), bits(row_bytes);
    k.fill_rgb(body.data(), width, kBackground);
    const int cell_w = std::max(1, img.width / static_cast<int>(groups.size()));
    const int bit_w = (cell_w - 1) / 8;
    const bool draw_bar = cell_w >= 8 && h >= 8;
    const bool draw_bits = bit_w >= 1 && h >= 4;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const int x = static_cast<int>(i) * cell_w;
        if (x + cell_w > img.width) {
            break;
        }
        const auto ch = groups[i].channel;
        Rgb colour = kGroupIdle;
        if (!group_enabled_[ch.value()]) {
            colour = kGroupDisabled;
        } else if (s.selected && *s.selected == ch) {
            colour = kGroupSelected;
        } else if (stale[ch.value()]) {
            colour = kGroupStale;
        }
        // One pixel gap between cells.
        k.fill_rgb(body.data() + static_cast<std::size_t>(x) * 3, static_cast<std::size_t>(std::max(1, cell_w - 1)), colour);
        ++cells;
    }
    bar = body;
    bits = body;
    for (std::size_t i = 0; i < cells; ++i) {
        const int x = static_cast<int>(i) * cell_w;
        const int ch = groups[i].channel.value();
        if (draw_bar && stale[static_cast<std::size_t>(ch)]) {
            k.fill_rgb(bar.data() + static_cast<std::size_t>(x) * 3, static_cast<std::size_t>(cell_w - 1), kGroupStale);
        }
        if (draw_bits) {
            // Channel index as eight bit blocks along the lower half of the cell.
            for (int bit = 0; bit < 8; ++bit) {
                bool one = (ch >> (7 - bit)) & 1;
                k.fill_rgb(bits.data() + static_cast<std::size_t>(x + bit * bit_w) * 3, static_cast<std::size_t>(bit_w),
                           one ? Rgb{255, 255, 255} : Rgb{0, 0, 0});
            }
        }
    }
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = body.data();
        if (draw_bar && y < 2) {
            src = bar.data();
        } else if (draw_bits && y >= h / 2 && y < h - 1) {
            src = bits.data();
        }
        std::memcpy(img.row(y0 + y), src, row_bytes);
    }
}

void Compositor::draw_board(const Rect& rect, const Frame& frame, const Image* fitted)
{
    if (fitted && fitted->width == rect.w && fitted->height == rect.h) {
        copy_rows(surface_, rect, *fitted);
    } else if (frame.image.width == rect.w && frame.image.height == rect.h) {
        copy_rows(surface_, rect, frame.image);
    } else {
        blit_scaled(surface_, rect, frame.image);
    }
}

FusedFramePtr Compositor::capture(Micros tick_ts)
{
    State state;
    std::uint64_t version = 0;
    auto out = std::make_shared<FusedFrame>();
    {
        std::lock_guard lock(state_mutex_);
        state = staged_;
        version = layout_version_;
        out->frame_seq = next_seq_++;
    }
    const CanvasLayout layout = layout_for(state);
    const auto canvas_bytes = static_cast<std::size_t>(scene_.canvas_width()) * scene_.canvas_height() * 3;

    std::array<bool, kMaxDevices> stale{};
    std::vector<Rect> placeholders;
    Micros composite_ts = tick_ts;
    out->channels.reserve(layout.boards.size());
    {
        // Boards are frozen while the canvas is read; cameras wait for at most one copy.
        std::vector<std::unique_lock<std::mutex>> locks;
        locks.reserve(scene_.boards().size());
        for (const auto& b : scene_.boards()) {
            locks.emplace_back(registers_[b.channel.value()].mutex);
        }
        if (version != surface_version_) {
            fill_rect(surface_, {0, 0, surface_.width, surface_.height}, kBackground);
            surface_rects_.fill(Rect{});
            for (const auto& board : layout.boards) {
                surface_rects_[board.channel.value()] = board.rect;
                if (const auto& f = registers_[board.channel.value()].frame) {
                    draw_board(board.rect, *f, nullptr);
                }
            }
            surface_version_ = version;
        }
        out->image.width = scene_.canvas_width();
        out->image.height = scene_.canvas_height();
        out->image.pixels.reserve(canvas_bytes);
        out->image.pixels.assign(surface_.pixels.begin(), surface_.pixels.end());

        for (const auto& board : layout.boards) {
            const auto& reg = registers_[board.channel.value()];
            const FramePtr& frame = reg.frame;
            const Micros period = reg.period_us > 0 ? reg.period_us : default_period_us_;
            const Micros age = frame ? tick_ts - frame->capture_ts : 0;
            if (!frame || age > options_.placeholder_after_us) {
                placeholders.push_back(board.rect);
                stale[board.channel.value()] = frame != nullptr;
                continue;
            }
            stale[board.channel.value()] = static_cast<double>(age) > options_.stale_periods * static_cast<double>(period);
            out->channels.push_back({board.channel, frame->seq, frame->capture_ts, board.rect});
            composite_ts = std::max(composite_ts, frame->capture_ts);
        }
    }
    out->image.pixels.resize(canvas_bytes);
    for (const auto& r : placeholders) {
        fill_rect(out->image, r, kPlaceholder);
    }
    render_overlay(out->image, state, stale);
    out->composite_ts = composite_ts;
    return out;
}

std::uint64_t Compositor::apply_layout(const LayoutRequest& request)
{
    if (request.mode == LayoutMode::focus && !has_board_[request.focus.value()]) {
        throw Error(ErrorCode::InvalidLayout, "no display board for channel " + std::to_string(request.focus.value()));
    }
    std::lock_guard lock(state_mutex_);
    staged_.layout = request;
    ++layout_version_;
    refresh_pending_rects();
    return next_seq_;
}

std::uint64_t Compositor::toggle_visibility(ChannelId channel)
{
    if (!has_board_[channel.value()]) {
        throw Error(ErrorCode::UnknownChannel, "no display board for channel " + std::to_string(channel.value()));
    }
    std::lock_guard lock(state_mutex_);
    staged_.visible[channel.value()] = !staged_.visible[channel.value()];
    ++layout_version_;
    refresh_pending_rects();
    return next_seq_;
}

std::uint64_t Compositor::select(ChannelId channel)
{
    if (!has_group_[channel.value()]) {
        throw Error(ErrorCode::UnknownChannel, "no control group for channel " + std::to_string(channel.value()));
    }
    std::lock_guard lock(state_mutex_);
    staged_.selected = channel;
    return next_seq_;
}

std::uint64_t Compositor::next_frame_seq() const
{
    std::lock_guard lock(state_mutex_);
    return next_seq_;
}

CanvasLayout Compositor::pending_layout() const
{
    State s;
    {
        std::lock_guard lock(state_mutex_);
        s = staged_;
    }
    return layout_for(s);
}

std::vector<ControlGroup> Compositor::control_groups() const
{
    State s;
    {
        std::lock_guard lock(state_mutex_);
        s = staged_;
    }
    std::vector<ControlGroup> out;
    for (const auto& g : scene_.control_groups()) {
        out.push_back({g.channel, s.selected && *s.selected == g.channel, false, g.enabled});
    }
    return out;
}

FusionLoop::FusionLoop(Compositor& compositor, StreamClock clock, double tick_rate, FrameCallback on_frame)
    : compositor_(compositor), clock_(clock), tick_rate_(tick_rate), on_frame_(std::move(on_frame))
{
}

FusionLoop::~FusionLoop() { stop(); }

void FusionLoop::start(Micros start_at)
{
    stop_ = false;
    thread_ = std::thread(&FusionLoop::run, this, start_at);
}

void FusionLoop::stop()
{
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    if (thread_.joinable()) {
        thread_.join();
    }
}

void FusionLoop::run(Micros start_at)
{
    const double period_us = 1e6 / tick_rate_;
    std::uint64_t k = 0;
    for (;;) {
        Micros due = start_at + static_cast<Micros>(std::llround(static_cast<double>(k) * period_us));
        {
            std::unique_lock lock(mutex_);
            if (wake_.wait_until(lock, clock_.to_time_point(due), [this] { return stop_; })) {
                return;
            }
        }
        TickStats stats;
        stats.tick_ts = clock_.now();
        Micros cpu0 = thread_cpu_us();
        auto frame = compositor_.capture(stats.tick_ts);
        stats.composite_cpu_us = thread_cpu_us() - cpu0;
        stats.composite_wall_us = clock_.now() - stats.tick_ts;
        ticks_.fetch_add(1);
        if (on_frame_) {
            on_frame_(frame, stats);
        }
        // Skip ticks that are already in the past.
        Micros now = clock_.now();
        auto next = static_cast<std::uint64_t>(std::floor(static_cast<double>(now - start_at) / period_us)) + 1;
        k = std::max(k + 1, next);
    }
}

} // namespace fusecast
