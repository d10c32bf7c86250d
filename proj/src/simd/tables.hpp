#pragma once

#include "kge/simd.hpp"

namespace kge::simd::detail {

const Kernels& scalar_table() noexcept;

#if defined(KGE_HAVE_AVX2)
const Kernels& avx2_table() noexcept;
#endif

}  // namespace kge::simd::detail
