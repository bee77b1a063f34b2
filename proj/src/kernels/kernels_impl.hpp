// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fusecast/kernels.hpp"

namespace fusecast::kernels {

namespace ref {
void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb colour);
void scale_row_nearest(const std::uint8_t* src, int src_w, const std::int32_t* src_offsets, std::uint8_t* dst,
                       int dst_w);
void convolve_interior(const double* in, std::size_t n, const double* taps, int radius, double* out);
} // namespace ref

#if defined(FUSECAST_HAVE_AVX2)
namespace avx2_impl {
void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb colour);
void scale_row_nearest(const std::uint8_t* src, int src_w, const std::int32_t* src_offsets, std::uint8_t* dst,
                       int dst_w);
void convolve_interior(const double* in, std::size_t n, const double* taps, int radius, double* out);
} // namespace avx2_impl
#endif

} // namespace fusecast::kernels
