#include "tables.hpp"

#include <cmath>

namespace concolic::kernels::detail {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += a * x[i];
    }
}

void divide(double* y, double d, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        y[i] /= d;
    }
}

void relu(const double* u, double* v, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = u[i] > 0.0 ? u[i] : 0.0;
    }
}

double max_abs_diff(const double* a, const double* b, std::size_t n)
{
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::fabs(a[i] - b[i]);
        if (d > m) {
            m = d;
        }
    }
    return m;
}

std::size_t count_diff(const double* a, const double* b, std::size_t n, double tol)
{
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::fabs(a[i] - b[i]) > tol) {
            ++count;
        }
    }
    return count;
}

// Reference order for the SIMD reductions: four interleaved partial sums,
// combined pairwise, then the tail added sequentially.
double sum_abs(const double* x, std::size_t n)
{
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (std::size_t j = 0; j < 4; ++j) {
            acc[j] += std::fabs(x[i + j]);
        }
    }
    double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (; i < n; ++i) {
        s += std::fabs(x[i]);
    }
    return s;
}

}  // namespace

const KernelTable kScalarTable{Isa::Scalar, axpy, divide, relu, max_abs_diff, count_diff, sum_abs};

}  // namespace concolic::kernels::detail
