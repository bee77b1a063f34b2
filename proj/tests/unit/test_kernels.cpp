// SPDX-License-Identifier: Apache-2.0
// Vector kernels must match the scalar reference bit for bit.
#include <random>
#include <vector>

#include "doctest.h"
#include "fusecast/kernels.hpp"

using namespace fusecast;

namespace {

const kernels::KernelTable* vector_table()
{
    const auto* t = kernels::avx2();
    if (t == nullptr) {
        MESSAGE("AVX2 unavailable; only the scalar reference is exercised");
    }
    return t;
}

} // namespace

TEST_CASE("active table is one of the known ones")
{
    const auto& a = kernels::active();
    CHECK((a.isa == kernels::Isa::scalar || a.isa == kernels::Isa::avx2));
    CHECK(kernels::scalar().isa == kernels::Isa::scalar);
}

TEST_CASE("fill_rgb reference")
{
    std::vector<std::uint8_t> buf(3 * 5 + 3, 7);
    kernels::scalar().fill_rgb(buf.data(), 5, {1, 2, 3});
    for (int i = 0; i < 5; ++i) {
        CHECK(buf[i * 3] == 1);
        CHECK(buf[i * 3 + 1] == 2);
        CHECK(buf[i * 3 + 2] == 3);
    }
    CHECK(buf[15] == 7); // untouched past the end
}

TEST_CASE("fill_rgb equivalence")
{
    const auto* v = vector_table();
    if (v == nullptr) {
        return;
    }
    std::mt19937 rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t pixels = std::uniform_int_distribution<std::size_t>(0, 300)(rng);
        std::size_t offset = std::uniform_int_distribution<std::size_t>(0, 31)(rng);
        Rgb c{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
        std::vector<std::uint8_t> a(offset + pixels * 3 + 64, 0xAB), b = a;
        kernels::scalar().fill_rgb(a.data() + offset, pixels, c);
        v->fill_rgb(b.data() + offset, pixels, c);
        CHECK(a == b);
    }
}

TEST_CASE("scale_row_nearest reference maps offsets")
{
    std::vector<std::uint8_t> src{10, 11, 12, 20, 21, 22, 30, 31, 32};
    std::vector<std::int32_t> offsets{0, 0, 3, 6, 6};
    std::vector<std::uint8_t> dst(15);
    kernels::scalar().scale_row_nearest(src.data(), 3, offsets.data(), dst.data(), 5);
    CHECK(dst == std::vector<std::uint8_t>{10, 11, 12, 10, 11, 12, 20, 21, 22, 30, 31, 32, 30, 31, 32});
}

TEST_CASE("scale_row_nearest equivalence")
{
    const auto* v = vector_table();
    if (v == nullptr) {
        return;
    }
    std::mt19937 rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        int src_w = std::uniform_int_distribution<int>(1, 400)(rng);
        int dst_w = std::uniform_int_distribution<int>(1, 700)(rng);
        // The source row is placed at the very end of its buffer so that an over-read would be caught
        // by sanitizers and the tail handling is exercised.
        std::vector<std::uint8_t> src(static_cast<std::size_t>(src_w) * 3);
        for (auto& b : src) {
            b = static_cast<std::uint8_t>(rng());
        }
        std::vector<std::int32_t> offsets(static_cast<std::size_t>(dst_w));
        for (int x = 0; x < dst_w; ++x) {
            offsets[x] = nearest_src(x, src_w, dst_w) * 3;
        }
        std::vector<std::uint8_t> a(static_cast<std::size_t>(dst_w) * 3 + 16, 0x5A), b = a;
        kernels::scalar().scale_row_nearest(src.data(), src_w, offsets.data(), a.data(), dst_w);
        v->scale_row_nearest(src.data(), src_w, offsets.data(), b.data(), dst_w);
        CHECK(a == b);
    }
}

TEST_CASE("scale_row_nearest equivalence with arbitrary offsets")
{
    const auto* v = vector_table();
    if (v == nullptr) {
        return;
    }
    std::mt19937 rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        int src_w = std::uniform_int_distribution<int>(1, 64)(rng);
        int dst_w = std::uniform_int_distribution<int>(1, 100)(rng);
        std::vector<std::uint8_t> src(static_cast<std::size_t>(src_w) * 3);
        for (auto& b : src) {
            b = static_cast<std::uint8_t>(rng());
        }
        std::vector<std::int32_t> offsets(static_cast<std::size_t>(dst_w));
        for (auto& o : offsets) {
            o = std::uniform_int_distribution<int>(0, src_w - 1)(rng) * 3;
        }
        std::vector<std::uint8_t> a(static_cast<std::size_t>(dst_w) * 3, 0x5A), b = a;
        kernels::scalar().scale_row_nearest(src.data(), src_w, offsets.data(), a.data(), dst_w);
        v->scale_row_nearest(src.data(), src_w, offsets.data(), b.data(), dst_w);
        CHECK(a == b);
    }
}

TEST_CASE("convolve_interior equivalence is bit exact")
{
    const auto* v = vector_table();
    if (v == nullptr) {
        return;
    }
    std::mt19937 rng(3);
    std::normal_distribution<double> noise(0.0, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = std::uniform_int_distribution<std::size_t>(0, 200)(rng);
        int radius = std::uniform_int_distribution<int>(0, 5)(rng);
        std::vector<double> in(n), taps(static_cast<std::size_t>(2 * radius + 1));
        for (auto& x : in) {
            x = noise(rng);
        }
        for (auto& t : taps) {
            t = std::uniform_real_distribution<double>(0, 1)(rng);
        }
        std::vector<double> a(n, -1.0), b(n, -1.0);
        kernels::scalar().convolve_interior(in.data(), n, taps.data(), radius, a.data());
        v->convolve_interior(in.data(), n, taps.data(), radius, b.data());
        CHECK(a == b);
    }
}
