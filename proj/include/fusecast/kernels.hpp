// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel inner loops of the compositor and the smoothing filter. Every kernel has a
// scalar reference; vector variants must produce bit-identical output and are selected once
// at runtime from the host CPU features (FUSECAST_SIMD=scalar forces the reference path).

#include <cstddef>
#include <cstdint>

#include "fusecast/image.hpp"

namespace fusecast::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    /// dst[0..pixels) = colour.
    void (*fill_rgb)(std::uint8_t* dst, std::size_t pixels, Rgb colour);
    /// dst pixel x = src pixel at byte offset src_offsets[x]; offsets index a row of src_w pixels.
    void (*scale_row_nearest)(const std::uint8_t* src, int src_w, const std::int32_t* src_offsets, std::uint8_t* dst,
                              int dst_w);
    /// out[i] = sum_{k=-radius..radius} taps[k + radius] * in[i + k], for i in [radius, n - radius).
    /// Terms are accumulated in increasing k with separate multiply and add.
    void (*convolve_interior)(const double* in, std::size_t n, const double* taps, int radius, double* out);
};

const KernelTable& scalar();
/// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2();

/// Best table for this CPU, honouring FUSECAST_SIMD.
const KernelTable& active();
const char* name(Isa isa);

} // namespace fusecast::kernels
