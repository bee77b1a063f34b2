// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <set>
#include <thread>

#include "doctest.h"
#include "fusecast/compositor.hpp"
#include "fusecast/error.hpp"

using namespace fusecast;

namespace {

FramePtr make_frame(int ch, std::uint64_t seq, Micros ts, int w = 320, int h = 180)
{
    auto f = std::make_shared<Frame>(synthetic_frame(ChannelId(ch), seq, w, h));
    f->capture_ts = ts;
    return f;
}

Compositor make_compositor(int n, int w = 1280, int h = 720, int overlay = 72)
{
    return Compositor(validate_config(paired_scene(n, w, h, 30)), {.overlay_height = overlay});
}

std::set<int> provenance_channels(const FusedFrame& f)
{
    std::set<int> out;
    for (const auto& c : f.channels) {
        out.insert(c.channel.value());
    }
    return out;
}

} // namespace

TEST_CASE("grid_layout examples")
{
    CHECK(grid_layout(0, 1280, 720, 72).empty());
    CHECK(grid_layout(1, 1280, 720, 72) == std::vector<Rect>{{0, 0, 1280, 648}});
    CHECK(grid_layout(4, 1280, 720, 72) ==
          std::vector<Rect>{{0, 0, 640, 324}, {640, 0, 640, 324}, {0, 324, 640, 324}, {640, 324, 640, 324}});
    CHECK(grid_layout(3, 1280, 720, 72) == std::vector<Rect>{{0, 0, 640, 324}, {640, 0, 640, 324}, {0, 324, 640, 324}});
}

TEST_CASE("grid_layout formula for every n")
{
    for (int n = 1; n <= 256; ++n) {
        int cols = 1;
        while (cols * cols < n) {
            ++cols;
        }
        int rows = (n + cols - 1) / cols;
        auto rects = grid_layout(n, 1280, 720, 72);
        REQUIRE(rects.size() == static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            CHECK(rects[i].w == 1280 / cols);
            CHECK(rects[i].h == 648 / rows);
            CHECK(rects[i].inside(1280, 648));
            for (int j = 0; j < i; ++j) {
                CHECK_FALSE(rects[i].intersects(rects[j]));
            }
        }
    }
}

TEST_CASE("ingest keeps the highest sequence")
{
    auto c = make_compositor(2);
    CHECK(c.ingest(make_frame(0, 5, 100)));
    CHECK(c.ingest(make_frame(0, 4, 200)));
    CHECK(c.latest(ChannelId(0))->seq == 5);
    CHECK(c.latest(ChannelId(1)) == nullptr);
    CHECK(c.ingest(make_frame(1, 0, 10)));
    CHECK(c.latest(ChannelId(1))->seq == 0);
    CHECK_FALSE(c.ingest(make_frame(9, 0, 10)));
    CHECK(c.dropped_unknown() == 1);
}

TEST_CASE("racing producers: register ends at the max seq")
{
    for (int trial = 0; trial < 50; ++trial) {
        auto c = make_compositor(1);
        auto a = make_frame(0, 10, 1, 64, 16);
        auto b = make_frame(0, 11, 2, 64, 16);
        std::thread t1([&] { c.ingest(a); });
        std::thread t2([&] { c.ingest(b); });
        t1.join();
        t2.join();
        CHECK(c.latest(ChannelId(0))->seq == 11);
    }
}

TEST_CASE("capture: every tile decodes to its channel and latest seq")
{
    auto c = make_compositor(3);
    for (int ch = 0; ch < 3; ++ch) {
        for (std::uint64_t s = 0; s < 4; ++s) {
            c.ingest(make_frame(ch, s * 3 + ch, 1000 + static_cast<Micros>(s)));
        }
    }
    auto f = c.capture(2000);
    REQUIRE(f->channels.size() == 3);
    CHECK(f->image.width == 1280);
    CHECK(f->image.height == 720);
    for (const auto& p : f->channels) {
        auto sig = decode_tile(f->image, p.rect, 320, 180);
        CHECK(sig.channel == p.channel.value());
        CHECK(sig.seq == p.source_seq);
        CHECK(p.source_seq == c.latest(p.channel)->seq);
        CHECK(f->composite_ts >= p.capture_ts);
    }
    // The empty fourth cell stays background.
    CHECK(f->image.at(700, 400) == kBackground);
}

TEST_CASE("capture of an empty scene")
{
    auto c = make_compositor(0);
    auto f = c.capture(0);
    CHECK(f->channels.empty());
    for (int y = 0; y < 648; y += 37) {
        for (int x = 0; x < 1280; x += 41) {
            CHECK(f->image.at(x, y) == kBackground);
        }
    }
    CHECK(f->image.at(5, 700) == kBackground);
}

TEST_CASE("stalled channel becomes a placeholder")
{
    auto c = make_compositor(2);
    c.ingest(make_frame(0, 0, 0));
    c.ingest(make_frame(1, 0, 4'900'000));
    c.ingest(make_frame(1, 1, 4'933'333));
    auto f = c.capture(4'950'000);
    CHECK(provenance_channels(*f) == std::set<int>{0, 1}); // 4.95 s old: not yet past the cut-off
    f = c.capture(5'100'000);
    REQUIRE(f->channels.size() == 1);
    CHECK(f->channels[0].channel.value() == 1);
    auto rects = grid_layout(2, 1280, 720, 72);
    CHECK(f->image.at(rects[0].x + rects[0].w / 2, rects[0].y + rects[0].h / 2) == kPlaceholder);
    CHECK(decode_tile(f->image, rects[1], 320, 180).seq == 1);
}

TEST_CASE("stale flag shows in the interaction strip")
{
    auto c = make_compositor(2, 640, 360, 36);
    c.ingest(make_frame(0, 0, 0));
    c.ingest(make_frame(0, 1, 33'333));
    c.ingest(make_frame(1, 0, 0));
    c.ingest(make_frame(1, 1, 33'333));
    c.ingest(make_frame(1, 2, 66'666));
    c.ingest(make_frame(1, 3, 99'999));
    auto f = c.capture(100'000);
    // channel 0 is 66.7 ms old with a 33.3 ms period: stale; channel 1 is fresh
    CHECK(f->image.at(10, 324 + 1) == Rgb{200, 40, 40});
    CHECK(f->image.at(330, 324 + 1) == Rgb{90, 90, 90});
}

TEST_CASE("layout changes apply at the next capture")
{
    auto c = make_compositor(4);
    for (int ch = 0; ch < 4; ++ch) {
        c.ingest(make_frame(ch, 1, 10));
    }
    auto f0 = c.capture(100);
    CHECK(provenance_channels(*f0) == std::set<int>{0, 1, 2, 3});

    auto seq = c.apply_layout({LayoutMode::focus, ChannelId(2)});
    CHECK(seq == f0->frame_seq + 1);
    auto f1 = c.capture(200);
    CHECK(f1->frame_seq == seq);
    REQUIRE(f1->channels.size() == 1);
    CHECK(f1->channels[0].channel.value() == 2);
    CHECK(f1->channels[0].rect == Rect{0, 0, 1280, 648});
    CHECK(decode_tile(f1->image, f1->channels[0].rect, 320, 180).channel == 2);

    seq = c.apply_layout({LayoutMode::grid, {}});
    auto f2 = c.capture(300);
    CHECK(f2->frame_seq == seq);
    CHECK(provenance_channels(*f2) == std::set<int>{0, 1, 2, 3});

    CHECK_THROWS_AS(c.apply_layout({LayoutMode::focus, ChannelId(99)}), Error);
}

TEST_CASE("visibility toggle is an involution")
{
    auto c = make_compositor(4);
    for (int ch = 0; ch < 4; ++ch) {
        c.ingest(make_frame(ch, 1, 10));
    }
    auto before = provenance_channels(*c.capture(100));
    c.toggle_visibility(ChannelId(1));
    auto hidden = c.capture(200);
    CHECK(provenance_channels(*hidden) == std::set<int>{0, 2, 3});
    c.toggle_visibility(ChannelId(1));
    CHECK(provenance_channels(*c.capture(300)) == before);
    CHECK_THROWS_AS(c.toggle_visibility(ChannelId(7)), Error);
}

TEST_CASE("selection highlights the control group")
{
    auto c = make_compositor(4, 640, 360, 36);
    c.select(ChannelId(1));
    auto f = c.capture(0);
    CHECK(f->image.at(160 + 2, 324 + 2) == Rgb{255, 200, 0});
    CHECK(f->image.at(2, 324 + 2) == Rgb{90, 90, 90});
    auto groups = c.control_groups();
    CHECK(groups[1].selected);
    CHECK_FALSE(groups[0].selected);
}

TEST_CASE("fixed output: frame size independent of n, tile area shrinks with the grid")
{
    std::size_t bytes = 0;
    for (int n : {1, 4, 16, 64}) {
        auto c = make_compositor(n);
        for (int ch = 0; ch < n; ++ch) {
            c.ingest(make_frame(ch, 0, 0, 64, 16));
        }
        auto f = c.capture(1);
        if (bytes == 0) {
            bytes = f->image.pixels.size();
        }
        CHECK(f->image.pixels.size() == bytes);
        int cols = 1;
        while (cols * cols < n) {
            ++cols;
        }
        int rows = (n + cols - 1) / cols;
        for (const auto& p : f->channels) {
            CHECK(p.rect.area() * cols * rows == 1280LL * 648);
        }
    }
}

TEST_CASE("capture does not wait for sources")
{
    auto c = make_compositor(16);
    auto t0 = std::chrono::steady_clock::now();
    auto f = c.capture(0);
    auto elapsed = std::chrono::steady_clock::now() - t0;
    CHECK(f->channels.empty());
    CHECK(elapsed < std::chrono::microseconds(33'333));
}

TEST_CASE("fusion loop ticks at its rate")
{
    auto c = make_compositor(1, 320, 180, 18);
    StreamClock clock;
    std::vector<std::uint64_t> seqs;
    std::mutex m;
    FusionLoop loop(c, clock, 50.0, [&](const FusedFramePtr& f, const TickStats&) {
        std::lock_guard lock(m);
        seqs.push_back(f->frame_seq);
    });
    loop.start(clock.now());
    std::this_thread::sleep_for(std::chrono::milliseconds(500));
    loop.stop();
    CHECK(seqs.size() >= 23);
    CHECK(seqs.size() <= 27);
    for (std::size_t i = 1; i < seqs.size(); ++i) {
        CHECK(seqs[i] == seqs[i - 1] + 1);
    }
}

TEST_CASE("frames fitted on the producer side composite to the same pixels")
{
    for (int n : {1, 3, 7, 50}) {
        auto direct = make_compositor(n, 640, 360, 36);
        auto fitted = make_compositor(n, 640, 360, 36);
        for (int ch = 0; ch < n; ++ch) {
            auto f = make_frame(ch, 11, 1000);
            direct.ingest(f);
            auto img = fitted.fit_to_board(*f);
            REQUIRE(img);
            fitted.ingest(f, img);
        }
        auto a = direct.capture(2000);
        auto b = fitted.capture(2000);
        CHECK(a->image.pixels == b->image.pixels);
        CHECK(a->channels == b->channels);
    }
}

TEST_CASE("a fitted copy for a stale layout is ignored")
{
    auto c = make_compositor(4, 640, 360, 36);
    auto f = make_frame(1, 3, 1000);
    auto img = c.fit_to_board(*f);
    c.apply_layout({LayoutMode::focus, ChannelId(1)});
    c.ingest(f, img);
    auto reference = make_compositor(4, 640, 360, 36);
    reference.apply_layout({LayoutMode::focus, ChannelId(1)});
    reference.ingest(f);
    CHECK(c.capture(2000)->image.pixels == reference.capture(2000)->image.pixels);
    c.apply_layout({LayoutMode::grid, ChannelId(0)});
    c.toggle_visibility(ChannelId(1));
    CHECK_FALSE(c.fit_to_board(*f));
}
