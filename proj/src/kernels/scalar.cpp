// SPDX-License-Identifier: Apache-2.0
#include "kernels_impl.hpp"

namespace fusecast::kernels::ref {

void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb colour)
{
    for (std::size_t i = 0; i < pixels; ++i) {
        dst[i * 3] = colour.r;
        dst[i * 3 + 1] = colour.g;
        dst[i * 3 + 2] = colour.b;
    }
}

void scale_row_nearest(const std::uint8_t* src, int /*src_w*/, const std::int32_t* src_offsets, std::uint8_t* dst,
                       int dst_w)
{
    for (int x = 0; x < dst_w; ++x) {
        const std::uint8_t* s = src + src_offsets[x];
        dst[x * 3] = s[0];
        dst[x * 3 + 1] = s[1];
        dst[x * 3 + 2] = s[2];
    }
}

void convolve_interior(const double* in, std::size_t n, const double* taps, int radius, double* out)
{
    const auto r = static_cast<std::size_t>(radius);
    for (std::size_t i = r; i + r < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k <= 2 * r; ++k) {
            acc = acc + taps[k] * in[i + k - r];
        }
        out[i] = acc;
    }
}

} // namespace fusecast::kernels::ref
