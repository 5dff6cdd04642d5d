#pragma once

#include "concolic/kernels.hpp"

namespace concolic::kernels::detail {

extern const KernelTable kScalarTable;

#if defined(__x86_64__) || defined(_M_X64)
#define CONCOLIC_HAVE_AVX2_KERNELS 1
extern const KernelTable kAvx2Table;
bool cpu_has_avx2();
#endif

#if defined(__aarch64__)
#define CONCOLIC_HAVE_NEON_KERNELS 1
extern const KernelTable kNeonTable;
#endif

}  // namespace concolic::kernels::detail
