#pragma once

#include "segreg/kernels.hpp"

namespace segreg::kernels::detail {

const KernelTable& scalar_table();
#if defined(SEGREG_HAVE_AVX2_TU)
const KernelTable& avx2_table();
#endif

}  // namespace segreg::kernels::detail
