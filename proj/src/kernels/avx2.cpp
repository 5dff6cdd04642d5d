// AVX2 kernels. Functions carry a target attribute instead of the whole file
// being built with -mavx2, so no AVX2 code leaks into inline functions that
// the rest of the program might pick up.
#include "tables.hpp"

#if defined(CONCOLIC_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#define CONCOLIC_AVX2 __attribute__((target("avx2")))

namespace concolic::kernels::detail {
namespace {

CONCOLIC_AVX2 inline __m256d abs_pd(__m256d x)
{
    return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

CONCOLIC_AVX2 void axpy(double a, const double* x, double* y, std::size_t n)
{
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

CONCOLIC_AVX2 void divide(double* y, double d, std::size_t n)
{
    const __m256d vd = _mm256_set1_pd(d);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_div_pd(_mm256_loadu_pd(y + i), vd));
    }
    for (; i < n; ++i) {
        y[i] /= d;
    }
}

CONCOLIC_AVX2 void relu(const double* u, double* v, std::size_t n)
{
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // max_pd(a, b) is (a > b ? a : b), the same selection as the scalar path
        _mm256_storeu_pd(v + i, _mm256_max_pd(_mm256_loadu_pd(u + i), zero));
    }
    for (; i < n; ++i) {
        v[i] = u[i] > 0.0 ? u[i] : 0.0;
    }
}

CONCOLIC_AVX2 double max_abs_diff(const double* a, const double* b, std::size_t n)
{
    __m256d vm = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        vm = _mm256_max_pd(d, vm);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    double m = 0.0;
    for (double lane : lanes) {
        if (lane > m) {
            m = lane;
        }
    }
    for (; i < n; ++i) {
        const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > m) {
            m = d;
        }
    }
    return m;
}

CONCOLIC_AVX2 std::size_t count_diff(const double* a, const double* b, std::size_t n, double tol)
{
    const __m256d vt = _mm256_set1_pd(tol);
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        const int mask = _mm256_movemask_pd(_mm256_cmp_pd(d, vt, _CMP_GT_OQ));
        count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
    }
    for (; i < n; ++i) {
        const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > tol) {
            ++count;
        }
    }
    return count;
}

CONCOLIC_AVX2 double sum_abs(const double* x, std::size_t n)
{
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, abs_pd(_mm256_loadu_pd(x + i)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) {
        s += x[i] < 0.0 ? -x[i] : x[i];
    }
    return s;
}

}  // namespace

const KernelTable kAvx2Table{Isa::Avx2, axpy, divide, relu, max_abs_diff, count_diff, sum_abs};

bool cpu_has_avx2()
{
    return __builtin_cpu_supports("avx2") != 0;
}

}  // namespace concolic::kernels::detail

#endif
