// NEON kernels (AArch64, where Advanced SIMD is baseline). Two float64x2
// accumulators emulate the four-lane reduction order of the reference.
#include "tables.hpp"

#if defined(CONCOLIC_HAVE_NEON_KERNELS)

#include <arm_neon.h>

namespace concolic::kernels::detail {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n)
{
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        // explicit mul + add, never vfmaq: results must match the scalar path
        const float64x2_t prod = vmulq_f64(va, vld1q_f64(x + i));
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void divide(double* y, double d, std::size_t n)
{
    const float64x2_t vd = vdupq_n_f64(d);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vdivq_f64(vld1q_f64(y + i), vd));
    }
    for (; i < n; ++i) {
        y[i] /= d;
    }
}

void relu(const double* u, double* v, std::size_t n)
{
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t x = vld1q_f64(u + i);
        vst1q_f64(v + i, vbslq_f64(vcgtq_f64(x, zero), x, zero));
    }
    for (; i < n; ++i) {
        v[i] = u[i] > 0.0 ? u[i] : 0.0;
    }
}

double max_abs_diff(const double* a, const double* b, std::size_t n)
{
    float64x2_t vm = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        vm = vbslq_f64(vcgtq_f64(d, vm), d, vm);
    }
    double m = vgetq_lane_f64(vm, 0);
    const double m1 = vgetq_lane_f64(vm, 1);
    if (m1 > m) {
        m = m1;
    }
    for (; i < n; ++i) {
        const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > m) {
            m = d;
        }
    }
    return m;
}

std::size_t count_diff(const double* a, const double* b, std::size_t n, double tol)
{
    const float64x2_t vt = vdupq_n_f64(tol);
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t gt = vcgtq_f64(vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)), vt);
        count += (vgetq_lane_u64(gt, 0) & 1u) + (vgetq_lane_u64(gt, 1) & 1u);
    }
    for (; i < n; ++i) {
        const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > tol) {
            ++count;
        }
    }
    return count;
}

double sum_abs(const double* x, std::size_t n)
{
    float64x2_t lo = vdupq_n_f64(0.0);  // lanes 0, 1
    float64x2_t hi = vdupq_n_f64(0.0);  // lanes 2, 3
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        lo = vaddq_f64(lo, vabsq_f64(vld1q_f64(x + i)));
        hi = vaddq_f64(hi, vabsq_f64(vld1q_f64(x + i + 2)));
    }
    double s = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) + (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
    for (; i < n; ++i) {
        s += x[i] < 0.0 ? -x[i] : x[i];
    }
    return s;
}

}  // namespace

const KernelTable kNeonTable{Isa::Neon, axpy, divide, relu, max_abs_diff, count_diff, sum_abs};

}  // namespace concolic::kernels::detail

#endif
