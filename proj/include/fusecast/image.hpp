// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fusecast {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(Rgb, Rgb) = default;
};

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    bool intersects(const Rect& o) const
    {
        return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
    }
    bool inside(int width, int height) const { return x >= 0 && y >= 0 && w >= 0 && h >= 0 && x + w <= width && y + h <= height; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Packed RGB8, row-major, no padding.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {}

    std::uint8_t* row(int y) { return pixels.data() + static_cast<std::size_t>(y) * width * 3; }
    const std::uint8_t* row(int y) const { return pixels.data() + static_cast<std::size_t>(y) * width * 3; }
    Rgb at(int x, int y) const
    {
        const auto* p = row(y) + x * 3;
        return {p[0], p[1], p[2]};
    }
};

/// Read-only window into an RGB8 buffer.
struct ImageView {
    const std::uint8_t* data = nullptr;
    int width = 0;
    int height = 0;
    std::size_t stride = 0; // bytes per row

    ImageView() = default;
    ImageView(const Image& img) // NOLINT(google-explicit-constructor)
        : data(img.pixels.data()), width(img.width), height(img.height), stride(static_cast<std::size_t>(img.width) * 3)
    {
    }

    const std::uint8_t* row(int y) const { return data + static_cast<std::size_t>(y) * stride; }
    Rgb at(int x, int y) const
    {
        const auto* p = row(y) + x * 3;
        return {p[0], p[1], p[2]};
    }
    ImageView sub(const Rect& r) const
    {
        ImageView v;
        v.data = data + static_cast<std::size_t>(r.y) * stride + static_cast<std::size_t>(r.x) * 3;
        v.width = r.w;
        v.height = r.h;
        v.stride = stride;
        return v;
    }
};

/// Source coordinate sampled for destination coordinate `d` by nearest-neighbor scaling
/// from `src_len` to `dst_len` samples.
constexpr int nearest_src(int d, int src_len, int dst_len)
{
    return static_cast<int>((static_cast<long long>(d) * src_len) / dst_len);
}

} // namespace fusecast
