// SPDX-License-Identifier: Apache-2.0
#include "fusecast/source.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fusecast/error.hpp"

namespace fusecast {

namespace {

void fill_cell(Image& img, int x0, int y0, bool white)
{
    std::uint8_t v = white ? 255 : 0;
    for (int y = y0; y < y0 + 8; ++y) {
        auto* p = img.row(y) + x0 * 3;
        std::fill(p, p + 2 * 3, v);
    }
}

void encode_strip(Image& img, int y0, std::uint32_t value)
{
    for (int bit = 0; bit < kSignatureBits; ++bit) {
        bool one = (value >> (kSignatureBits - 1 - bit)) & 1u;
        fill_cell(img, bit * 2, y0, one);
    }
}

enum class Level { black, white, other };

Level classify(Rgb p)
{
    int luma = (p.r * 299 + p.g * 587 + p.b * 114) / 1000;
    int spread = std::max({p.r, p.g, p.b}) - std::min({p.r, p.g, p.b});
    if (spread > 48) {
        return Level::other;
    }
    if (luma >= 192) {
        return Level::white;
    }
    if (luma <= 63) {
        return Level::black;
    }
    return Level::other;
}

struct Votes {
    int white = 0, black = 0, total = 0;
    void add(Rgb p)
    {
        ++total;
        switch (classify(p)) {
        case Level::white: ++white; break;
        case Level::black: ++black; break;
        case Level::other: break;
        }
    }
    bool decide(int bit, int strip) const
    {
        if (total == 0 || 2 * std::max(white, black) <= total) {
            throw Error(ErrorCode::UndecodableRegion, "bit cell " + std::to_string(bit) + " of strip " +
                                                          std::to_string(strip) + " is not saturated");
        }
        return white > black;
    }
};

Signature assemble(const std::array<std::array<bool, kSignatureBits>, 2>& bits)
{
    std::uint32_t seq = 0, channel = 0;
    for (int i = 0; i < kSignatureBits; ++i) {
        seq = (seq << 1) | std::uint32_t(bits[0][i]);
        channel = (channel << 1) | std::uint32_t(bits[1][i]);
    }
    if (channel >= static_cast<std::uint32_t>(kMaxDevices)) {
        throw Error(ErrorCode::UndecodableRegion, "decoded channel " + std::to_string(channel) + " out of range");
    }
    return {static_cast<int>(channel), seq};
}

} // namespace

Rgb channel_hue(ChannelId channel)
{
    // HSV with S=0.6, V=0.7 keeps the background clear of the signature's saturated levels.
    double h = std::fmod(channel.value() * 47.0, 360.0) / 60.0;
    double v = 0.7 * 255, s = 0.6;
    double c = v * s;
    double x = c * (1 - std::fabs(std::fmod(h, 2.0) - 1));
    double m = v - c;
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
    }
    auto q = [m](double u) { return static_cast<std::uint8_t>(std::lround(u + m)); };
    return {q(r), q(g), q(b)};
}

Frame synthetic_frame(ChannelId channel, std::uint64_t seq, int width, int height)
{
    if (width < kSignatureWidth || height < kSignatureHeight) {
        throw Error(ErrorCode::DimensionsTooSmall, std::to_string(width) + "x" + std::to_string(height) +
                                                       " is below the 64x16 signature block");
    }
    Frame f;
    f.channel = channel;
    f.seq = seq;
    f.image = Image(width, height);
    Rgb bg = channel_hue(channel);
    auto* p = f.image.pixels.data();
    for (std::size_t i = 0; i < f.image.pixels.size(); i += 3) {
        p[i] = bg.r;
        p[i + 1] = bg.g;
        p[i + 2] = bg.b;
    }
    // A moving bar below the signature gives the stream visible motion.
    int bar_x = static_cast<int>(seq % static_cast<std::uint64_t>(width));
    int bar_w = std::max(1, width / 32);
    for (int y = kSignatureHeight; y < height; ++y) {
        auto* row = f.image.row(y);
        for (int x = bar_x; x < std::min(width, bar_x + bar_w); ++x) {
            row[x * 3] = 230;
            row[x * 3 + 1] = 230;
            row[x * 3 + 2] = 230;
        }
    }
    encode_strip(f.image, 0, static_cast<std::uint32_t>(seq));
    encode_strip(f.image, 8, static_cast<std::uint32_t>(channel.value()));
    return f;
}

Signature decode_signature(ImageView region)
{
    if (region.width < kSignatureBits || region.height < 2) {
        throw Error(ErrorCode::UndecodableRegion, "region too small for 32 bit cells");
    }
    std::array<std::array<bool, kSignatureBits>, 2> bits{};
    int half = region.height / 2;
    for (int strip = 0; strip < 2; ++strip) {
        int y0 = strip * half;
        int y1 = strip == 0 ? half : region.height;
        for (int bit = 0; bit < kSignatureBits; ++bit) {
            int x0 = bit * region.width / kSignatureBits;
            int x1 = (bit + 1) * region.width / kSignatureBits;
            Votes v;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    v.add(region.at(x, y));
                }
            }
            bits[strip][bit] = v.decide(bit, strip);
        }
    }
    return assemble(bits);
}

Signature decode_tile(ImageView canvas, const Rect& tile, int src_w, int src_h)
{
    if (tile.w <= 0 || tile.h <= 0 || src_w < kSignatureWidth || src_h < kSignatureHeight) {
        throw Error(ErrorCode::UndecodableRegion, "empty tile");
    }
    std::array<std::array<Votes, kSignatureBits>, 2> votes{};
    for (int dy = 0; dy < tile.h; ++dy) {
        int sy = nearest_src(dy, src_h, tile.h);
        if (sy >= kSignatureHeight) {
            break;
        }
        int strip = sy / 8;
        for (int dx = 0; dx < tile.w; ++dx) {
            int sx = nearest_src(dx, src_w, tile.w);
            if (sx >= kSignatureWidth) {
                break;
            }
            votes[strip][sx / 2].add(canvas.at(tile.x + dx, tile.y + dy));
        }
    }
    std::array<std::array<bool, kSignatureBits>, 2> bits{};
    for (int strip = 0; strip < 2; ++strip) {
        for (int bit = 0; bit < kSignatureBits; ++bit) {
            bits[strip][bit] = votes[strip][bit].decide(bit, strip);
        }
    }
    return assemble(bits);
}

namespace {

std::string next_token(std::istream& in)
{
    std::string tok;
    while (in) {
        int c = in.peek();
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    while (in && !std::isspace(in.peek()) && in.peek() != EOF) {
        tok.push_back(static_cast<char>(in.get()));
    }
    return tok;
}

} // namespace

Image read_ppm(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::FileUnreadable, "cannot open " + path);
    }
    if (next_token(in) != "P6") {
        throw Error(ErrorCode::FileUnreadable, path + " is not a binary PPM (P6)");
    }
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw Error(ErrorCode::FileUnreadable, path + ": malformed PPM header");
    }
    if (w <= 0 || h <= 0 || maxval != 255) {
        throw Error(ErrorCode::FileUnreadable, path + ": only 8-bit PPM with positive size is supported");
    }
    in.get(); // single whitespace before the raster
    Image img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw Error(ErrorCode::FileUnreadable, path + ": truncated raster");
    }
    return img;
}

void write_ppm(const std::string& path, const Image& image)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path);
    }
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

std::vector<Image> load_frame_directory(const std::string& dir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw Error(ErrorCode::FileUnreadable, dir + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (e.is_regular_file() && e.path().extension() == ".ppm") {
            files.push_back(e.path());
        }
    }
    if (files.empty()) {
        throw Error(ErrorCode::FileUnreadable, dir + " contains no .ppm frames");
    }
    std::sort(files.begin(), files.end());
    std::vector<Image> frames;
    frames.reserve(files.size());
    for (const auto& f : files) {
        frames.push_back(read_ppm(f.string()));
    }
    return frames;
}

std::vector<SourceSpec> parse_source_spec(const std::string& text, int first_channel, int width, int height,
                                          double frame_rate)
{
    auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw Error(ErrorCode::MalformedCommand, "source spec '" + text + "' needs a kind prefix");
    }
    std::string kind = text.substr(0, colon);
    std::string rest = text.substr(colon + 1);
    std::vector<SourceSpec> out;
    if (kind == "synthetic") {
        int count = 0;
        try {
            std::size_t used = 0;
            count = std::stoi(rest, &used);
            if (used != rest.size()) {
                throw std::invalid_argument(rest);
            }
        } catch (const std::exception&) {
            throw Error(ErrorCode::MalformedCommand, "synthetic source count '" + rest + "' is not an integer");
        }
        if (count < 0) {
            throw Error(ErrorCode::MalformedCommand, "negative source count");
        }
        // Channel ids are range-checked by scene validation, so over-capacity counts surface there.
        for (int i = 0; i < count; ++i) {
            SourceSpec s;
            s.channel = ChannelId((first_channel + i) % kMaxDevices);
            s.kind = SourceKind::synthetic;
            s.frame_rate = frame_rate;
            s.width = width;
            s.height = height;
            out.push_back(s);
        }
    } else if (kind == "file") {
        auto at = rest.rfind('@');
        SourceSpec s;
        s.channel = ChannelId(first_channel);
        s.kind = SourceKind::file;
        s.path = rest.substr(0, at);
        s.frame_rate = frame_rate;
        if (at != std::string::npos) {
            try {
                s.frame_rate = std::stod(rest.substr(at + 1));
            } catch (const std::exception&) {
                throw Error(ErrorCode::MalformedCommand, "bad frame rate in '" + text + "'");
            }
        }
        s.width = width;
        s.height = height;
        out.push_back(s);
    } else {
        throw Error(ErrorCode::MalformedCommand, "unknown source kind '" + kind + "'");
    }
    return out;
}

SourceHandle::~SourceHandle() { stop(); }

void SourceHandle::stop()
{
    {
        std::lock_guard lock(mutex_);
        stop_requested_ = true;
    }
    wake_.notify_all();
    if (thread_.joinable()) {
        thread_.join();
    }
    stopped_ = true;
}

void SourceHandle::loop(SourceSpec spec, FrameSink sink, StreamClock clock, SourceTiming timing,
                        std::vector<Image> files)
{
    const double period_us = 1e6 / spec.frame_rate;
    Micros last_ts = -1;
    for (std::uint64_t seq = 0;; ++seq) {
        Micros due = timing.start_at + timing.phase + static_cast<Micros>(std::llround(seq * period_us));
        {
            std::unique_lock lock(mutex_);
            if (wake_.wait_until(lock, clock.to_time_point(due), [this] { return stop_requested_; })) {
                break;
            }
        }
        auto frame = std::make_shared<Frame>();
        Micros ts = std::max(clock.now(), last_ts + 1);
        last_ts = ts;
        if (spec.kind == SourceKind::synthetic) {
            *frame = synthetic_frame(spec.channel, seq, spec.width, spec.height);
        } else {
            frame->channel = spec.channel;
            frame->seq = seq;
            frame->image = files[seq % files.size()];
        }
        frame->capture_ts = ts;
        {
            std::lock_guard lock(mutex_);
            if (stop_requested_) {
                break;
            }
        }
        bool open = sink(std::move(frame));
        emitted_.fetch_add(1);
        cpu_us_.store(thread_cpu_us());
        if (!open) {
            break;
        }
    }
    stopped_ = true;
}

std::unique_ptr<SourceHandle> run_source(const SourceSpec& spec, FrameSink sink, const StreamClock& clock,
                                         SourceTiming timing)
{
    if (!(spec.frame_rate > 0) || spec.width <= 0 || spec.height <= 0) {
        throw Error(ErrorCode::BadDimensions, "source needs positive rate and dimensions");
    }
    std::vector<Image> files;
    if (spec.kind == SourceKind::file) {
        files = load_frame_directory(spec.path);
    } else if (spec.width < kSignatureWidth || spec.height < kSignatureHeight) {
        throw Error(ErrorCode::DimensionsTooSmall, "synthetic sources need at least 64x16");
    }
    std::unique_ptr<SourceHandle> h(new SourceHandle());
    h->thread_ = std::thread(&SourceHandle::loop, h.get(), spec, std::move(sink), clock, timing, std::move(files));
    return h;
}

} // namespace fusecast
