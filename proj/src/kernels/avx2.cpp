// SPDX-License-Identifier: Apache-2.0
// Built with -mavx2 -ffp-contract=off; only reached after a runtime CPU check.
#include "kernels_impl.hpp"

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cstring>

namespace fusecast::kernels::avx2_impl {

namespace {

// Byte i of the 96-byte, 32-pixel pattern takes colour component i % 3.
constexpr auto kPatternIndex = [] {
    std::array<std::uint8_t, 96> idx{};
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = static_cast<std::uint8_t>(i % 3);
    }
    return idx;
}();

} // namespace

void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb colour)
{
    if (pixels < 8) {
        ref::fill_rgb(dst, pixels, colour);
        return;
    }
    // 96 bytes = 32 pixels, so three registers repeat the 3-byte pattern exactly.
    const __m256i rgb = _mm256_set1_epi32(colour.r | (colour.g << 8) | (colour.b << 16));
    const auto* index = reinterpret_cast<const __m256i*>(kPatternIndex.data());
    const __m256i a = _mm256_shuffle_epi8(rgb, _mm256_loadu_si256(index));
    const __m256i b = _mm256_shuffle_epi8(rgb, _mm256_loadu_si256(index + 1));
    const __m256i c = _mm256_shuffle_epi8(rgb, _mm256_loadu_si256(index + 2));
    std::size_t i = 0;
    for (; i + 32 <= pixels; i += 32) {
        auto* p = reinterpret_cast<__m256i*>(dst + i * 3);
        _mm256_storeu_si256(p, a);
        _mm256_storeu_si256(p + 1, b);
        _mm256_storeu_si256(p + 2, c);
    }
    if (i < pixels) {
        alignas(32) std::uint8_t pattern[96];
        _mm256_store_si256(reinterpret_cast<__m256i*>(pattern), a);
        _mm256_store_si256(reinterpret_cast<__m256i*>(pattern + 32), b);
        _mm256_store_si256(reinterpret_cast<__m256i*>(pattern + 64), c);
        std::memcpy(dst + i * 3, pattern, (pixels - i) * 3);
    }
}

void scale_row_nearest(const std::uint8_t* src, int src_w, const std::int32_t* src_offsets, std::uint8_t* dst,
                       int dst_w)
{
    if (src_w < 2) {
        ref::scale_row_nearest(src, src_w, src_offsets, dst, dst_w);
        return;
    }
    // Gather 8 source pixels as 32-bit words, drop the extra byte of each word and store the two
    // 12-byte halves with overlapping 16-byte stores. Near the row end a word starting at the
    // pixel would leave the row, so those chunks read the word ending at the pixel instead.
    const __m256i pack = _mm256_setr_epi8(0, 1, 2, 4, 5, 6, 8, 9, 10, 12, 13, 14, -1, -1, -1, -1,
                                          0, 1, 2, 4, 5, 6, 8, 9, 10, 12, 13, 14, -1, -1, -1, -1);
    const __m256i pack_high = _mm256_setr_epi8(1, 2, 3, 5, 6, 7, 9, 10, 11, 13, 14, 15, -1, -1, -1, -1,
                                               1, 2, 3, 5, 6, 7, 9, 10, 11, 13, 14, 15, -1, -1, -1, -1);
    const __m256i lanes = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
    const __m256i last_safe = _mm256_set1_epi32((src_w - 1) * 3 - 1);
    const __m256i zero = _mm256_setzero_si256();
    for (int x = 0; x < dst_w; x += 8) {
        const int count = std::min(8, dst_w - x);
        const __m256i mask = _mm256_cmpgt_epi32(_mm256_set1_epi32(count), lanes);
        const __m256i idx = count == 8 ? _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src_offsets + x))
                                       : _mm256_maskload_epi32(src_offsets + x, mask);
        const bool near_end = _mm256_movemask_epi8(_mm256_and_si256(_mm256_cmpgt_epi32(idx, last_safe), mask)) != 0;
        __m256i packed;
        if (!near_end) {
            packed = _mm256_shuffle_epi8(
                _mm256_mask_i32gather_epi32(zero, reinterpret_cast<const int*>(src), idx, mask, 1), pack);
        } else if (_mm256_movemask_epi8(_mm256_and_si256(_mm256_cmpeq_epi32(idx, zero), mask)) == 0) {
            packed = _mm256_shuffle_epi8(
                _mm256_mask_i32gather_epi32(zero, reinterpret_cast<const int*>(src - 1), idx, mask, 1), pack_high);
        } else {
            // Narrow source: the chunk spans both row ends.
            ref::scale_row_nearest(src, src_w, src_offsets + x, dst + x * 3, count);
            continue;
        }
        if (x + 10 <= dst_w) {
            _mm_storeu_si128(reinterpret_cast<__m128i*>(dst + x * 3), _mm256_castsi256_si128(packed));
            _mm_storeu_si128(reinterpret_cast<__m128i*>(dst + x * 3 + 12), _mm256_extracti128_si256(packed, 1));
        } else {
            alignas(32) std::uint8_t tmp[32];
            _mm_storeu_si128(reinterpret_cast<__m128i*>(tmp), _mm256_castsi256_si128(packed));
            _mm_storeu_si128(reinterpret_cast<__m128i*>(tmp + 12), _mm256_extracti128_si256(packed, 1));
            std::memcpy(dst + x * 3, tmp, static_cast<std::size_t>(count) * 3);
        }
    }
}

void convolve_interior(const double* in, std::size_t n, const double* taps, int radius, double* out)
{
    const auto r = static_cast<std::size_t>(radius);
    if (n < 2 * r + 1) {
        return;
    }
    const std::size_t end = n - r;
    std::size_t i = r;
    for (; i + 4 <= end; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t k = 0; k <= 2 * r; ++k) {
            const __m256d t = _mm256_set1_pd(taps[k]);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(t, _mm256_loadu_pd(in + i + k - r)));
        }
        _mm256_storeu_pd(out + i, acc);
    }
    if (i < end) {
        // tail: reference loop over the remaining outputs
        ref::convolve_interior(in + i - r, end - i + 2 * r, taps, radius, out + i - r);
    }
}

} // namespace fusecast::kernels::avx2_impl
