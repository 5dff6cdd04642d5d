// Data-parallel inner loops shared by forward evaluation, the simplex tableau
// and the distance computations.
//
// Every kernel has a scalar reference implementation. SIMD variants (AVX2 on
// x86-64, NEON on AArch64) are selected at runtime and must produce results
// that are bitwise identical to the reference: elementwise kernels perform
// the same IEEE operations per lane, and reductions use a fixed four-lane
// blocked summation order that the reference reproduces exactly.
#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace concolic::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;
    /// y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    /// y[i] /= d
    void (*divide)(double* y, double d, std::size_t n);
    /// v[i] = max(u[i], 0); negative zero maps to +0
    void (*relu)(const double* u, double* v, std::size_t n);
    /// max_i |a[i] - b[i]|, 0 for n == 0
    double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
    /// #{i : |a[i] - b[i]| > tol}
    std::size_t (*count_diff)(const double* a, const double* b, std::size_t n, double tol);
    /// sum_i |x[i]| in four-lane blocked order
    double (*sum_abs)(const double* x, std::size_t n);
};

const KernelTable& scalar_table();

/// Table for `isa`, or nullptr when it is not compiled in or the CPU lacks it.
const KernelTable* table_for(Isa isa);

/// Currently selected table. The first call picks the widest supported ISA,
/// unless the CONCOLIC_SIMD environment variable names one ("scalar",
/// "avx2", "neon").
const KernelTable& active();

/// Force a table. Returns false (and keeps the current one) if unsupported.
bool select(Isa isa);

/// All tables usable on this machine, scalar first.
std::vector<Isa> available();

// Span wrappers over the active table.

inline void axpy(double a, std::span<const double> x, std::span<double> y)
{
    active().axpy(a, x.data(), y.data(), y.size());
}

inline void divide(std::span<double> y, double d)
{
    active().divide(y.data(), d, y.size());
}

inline void relu(std::span<const double> u, std::span<double> v)
{
    active().relu(u.data(), v.data(), v.size());
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
    return active().max_abs_diff(a.data(), b.data(), a.size());
}

inline std::size_t count_diff(std::span<const double> a, std::span<const double> b, double tol)
{
    return active().count_diff(a.data(), b.data(), a.size(), tol);
}

inline double sum_abs(std::span<const double> x)
{
    return active().sum_abs(x.data(), x.size());
}

}  // namespace concolic::kernels
