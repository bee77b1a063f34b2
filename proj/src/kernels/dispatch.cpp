// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <cstring>

#include "kernels_impl.hpp"

namespace fusecast::kernels {

const KernelTable& scalar()
{
    static const KernelTable table{Isa::scalar, &ref::fill_rgb, &ref::scale_row_nearest, &ref::convolve_interior};
    return table;
}

const KernelTable* avx2()
{
#if defined(FUSECAST_HAVE_AVX2)
    static const KernelTable table{Isa::avx2, &avx2_impl::fill_rgb, &avx2_impl::scale_row_nearest,
                                   &avx2_impl::convolve_interior};
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active()
{
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* force = std::getenv("FUSECAST_SIMD");
        if (force != nullptr && std::strcmp(force, "scalar") == 0) {
            return scalar();
        }
        if (const auto* t = avx2()) {
            return *t;
        }
        return scalar();
    }();
    return chosen;
}

const char* name(Isa isa)
{
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    }
    return "unknown";
}

} // namespace fusecast::kernels
