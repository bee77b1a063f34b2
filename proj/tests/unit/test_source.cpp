// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <filesystem>
#include <mutex>
#include <random>
#include <thread>

#include "doctest.h"
#include "fusecast/error.hpp"
#include "fusecast/source.hpp"

using namespace fusecast;

namespace {

// Reads back one strip by sampling the centre of each 2x8 cell; independent of decode_signature.
std::uint32_t read_strip(const Image& img, int y0)
{
    std::uint32_t v = 0;
    for (int bit = 0; bit < 32; ++bit) {
        Rgb p = img.at(bit * 2, y0 + 4);
        v = (v << 1) | (p.r > 128 ? 1u : 0u);
    }
    return v;
}

Image box_downscale_2x(const Image& src)
{
    Image out(src.width / 2, src.height / 2);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                int sum = src.row(2 * y)[(2 * x) * 3 + c] + src.row(2 * y)[(2 * x + 1) * 3 + c] +
                          src.row(2 * y + 1)[(2 * x) * 3 + c] + src.row(2 * y + 1)[(2 * x + 1) * 3 + c];
                out.row(y)[x * 3 + c] = static_cast<std::uint8_t>((sum + 2) / 4);
            }
        }
    }
    return out;
}

ImageView signature_view(const Image& img, int scale_num = 1, int scale_den = 1)
{
    return ImageView(img).sub({0, 0, kSignatureWidth * scale_num / scale_den, kSignatureHeight * scale_num / scale_den});
}

std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("fusecast_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("synthetic frame seq 0 strip is black")
{
    auto f = synthetic_frame(ChannelId(0), 0, 128, 64);
    CHECK(f.image.pixels.size() == 128u * 64u * 3u);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 64; ++x) {
            CHECK(f.image.at(x, y) == Rgb{0, 0, 0});
        }
    }
}

TEST_CASE("synthetic frame encodes seq and channel")
{
    auto f = synthetic_frame(ChannelId(3), 5, 128, 64);
    CHECK(read_strip(f.image, 0) == 5u);
    CHECK(read_strip(f.image, 8) == 3u);
    CHECK(decode_signature(signature_view(f.image)) == Signature{3, 5});
}

TEST_CASE("synthetic frame is deterministic")
{
    auto a = synthetic_frame(ChannelId(9), 12345, 200, 100);
    auto b = synthetic_frame(ChannelId(9), 12345, 200, 100);
    CHECK(a.image.pixels == b.image.pixels);
    CHECK_THROWS_AS(synthetic_frame(ChannelId(0), 0, 63, 16), Error);
    CHECK_THROWS_AS(synthetic_frame(ChannelId(0), 0, 64, 15), Error);
    CHECK_NOTHROW(synthetic_frame(ChannelId(0), 0, 64, 16));
}

TEST_CASE("signature round trip over random inputs")
{
    std::mt19937_64 rng(42);
    for (int i = 0; i < 1000; ++i) {
        int ch = std::uniform_int_distribution<int>(0, 255)(rng);
        auto seq = static_cast<std::uint32_t>(rng());
        auto f = synthetic_frame(ChannelId(ch), seq, 64, 16);
        Signature s = decode_signature(f.image);
        CHECK(s.channel == ch);
        CHECK(s.seq == seq);
        CHECK(read_strip(f.image, 0) == seq);
    }
}

TEST_CASE("all-gray region is undecodable")
{
    Image gray(64, 16);
    std::fill(gray.pixels.begin(), gray.pixels.end(), std::uint8_t{128});
    CHECK_THROWS_AS(decode_signature(gray), Error);
    try {
        decode_signature(gray);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UndecodableRegion);
    }
}

TEST_CASE("signature survives 2x box downscale")
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        int ch = std::uniform_int_distribution<int>(0, 255)(rng);
        auto seq = static_cast<std::uint32_t>(rng());
        auto f = synthetic_frame(ChannelId(ch), seq, 128, 64);
        auto small = box_downscale_2x(f.image);
        CHECK(decode_signature(signature_view(small, 1, 2)) == Signature{ch, seq});
    }
}

TEST_CASE("decode_tile handles non-integer nearest scaling")
{
    // Nearest-neighbour scale written independently of the compositor.
    auto f = synthetic_frame(ChannelId(17), 0xDEADBEEF, 320, 180);
    for (auto [tw, th] : {std::pair{640, 324}, std::pair{427, 216}, std::pair{200, 120}, std::pair{320, 180}}) {
        Image canvas(tw + 10, th + 10);
        for (int y = 0; y < th; ++y) {
            for (int x = 0; x < tw; ++x) {
                int sx = x * 320 / tw;
                int sy = y * 180 / th;
                std::copy_n(f.image.row(sy) + sx * 3, 3, canvas.row(y + 5) + (x + 5) * 3);
            }
        }
        CHECK(decode_tile(canvas, {5, 5, tw, th}, 320, 180) == Signature{17, 0xDEADBEEF});
    }
}

TEST_CASE("ppm round trip and directory loading")
{
    auto dir = temp_dir("ppm");
    for (int i = 0; i < 3; ++i) {
        write_ppm((dir / ("frame_" + std::to_string(i) + ".ppm")).string(),
                  synthetic_frame(ChannelId(1), static_cast<std::uint64_t>(i), 80, 20).image);
    }
    auto frames = load_frame_directory(dir.string());
    REQUIRE(frames.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(decode_signature(signature_view(frames[i])).seq == static_cast<std::uint32_t>(i));
    }
    CHECK_THROWS_AS(load_frame_directory((dir / "missing").string()), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("source spec shorthand")
{
    auto specs = parse_source_spec("synthetic:4", 0, 320, 180, 30);
    REQUIRE(specs.size() == 4);
    CHECK(specs[3].channel.value() == 3);
    auto file = parse_source_spec("file:/tmp/frames@12.5", 5, 320, 180, 30);
    REQUIRE(file.size() == 1);
    CHECK(file[0].kind == SourceKind::file);
    CHECK(file[0].path == "/tmp/frames");
    CHECK(file[0].frame_rate == 12.5);
    CHECK(file[0].channel.value() == 5);
    CHECK_THROWS_AS(parse_source_spec("camera:1", 0, 320, 180, 30), Error);
    CHECK_THROWS_AS(parse_source_spec("synthetic:x", 0, 320, 180, 30), Error);
}

TEST_CASE("synthetic source rate and monotonicity")
{
    StreamClock clock;
    std::mutex m;
    std::vector<FramePtr> got;
    SourceSpec spec{.channel = ChannelId(2), .frame_rate = 30, .width = 64, .height = 16};
    auto h = run_source(spec, [&](FramePtr f) {
        std::lock_guard lock(m);
        got.push_back(std::move(f));
        return true;
    }, clock, {clock.now(), 0});
    std::this_thread::sleep_for(std::chrono::milliseconds(1000));
    h->stop();
    std::size_t count = got.size();
    // Frames due at 0, 33.3, ..., 966.7 ms fall inside the window; allow one either side.
    CHECK(count >= 29);
    CHECK(count <= 31);
    double mean_delta = double(got.back()->capture_ts - got.front()->capture_ts) / double(count - 1);
    CHECK(mean_delta == doctest::Approx(33333.0).epsilon(0.05));
    for (std::size_t i = 1; i < got.size(); ++i) {
        CHECK(got[i]->seq > got[i - 1]->seq);
        CHECK(got[i]->capture_ts > got[i - 1]->capture_ts);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    CHECK(got.size() == count); // nothing after stop()
}

TEST_CASE("file source cycles its frames")
{
    auto dir = temp_dir("filesrc");
    for (int i = 0; i < 3; ++i) {
        write_ppm((dir / ("f" + std::to_string(i) + ".ppm")).string(),
                  synthetic_frame(ChannelId(0), static_cast<std::uint64_t>(100 + i), 64, 16).image);
    }
    StreamClock clock;
    std::mutex m;
    std::vector<FramePtr> got;
    SourceSpec spec{.channel = ChannelId(4), .kind = SourceKind::file, .frame_rate = 30, .path = dir.string()};
    auto h = run_source(spec, [&](FramePtr f) {
        std::lock_guard lock(m);
        got.push_back(std::move(f));
        return got.size() < 30;
    }, clock, {clock.now(), 0});
    std::this_thread::sleep_for(std::chrono::milliseconds(1200));
    CHECK_FALSE(h->running());
    REQUIRE(got.size() == 30);
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i]->seq == i);
        CHECK(got[i]->channel.value() == 4);
        CHECK(decode_signature(signature_view(got[i]->image)).seq == 100 + i % 3);
    }
    std::filesystem::remove_all(dir);

    SourceSpec missing{.channel = ChannelId(0), .kind = SourceKind::file, .path = "/nonexistent/dir"};
    CHECK_THROWS_AS(run_source(missing, [](FramePtr) { return true; }, clock), Error);
}
