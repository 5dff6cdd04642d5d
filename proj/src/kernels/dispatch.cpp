#include "tables.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace concolic::kernels {
namespace {

const KernelTable* widest()
{
#if defined(CONCOLIC_HAVE_AVX2_KERNELS)
    if (detail::cpu_has_avx2()) {
        return &detail::kAvx2Table;
    }
#endif
#if defined(CONCOLIC_HAVE_NEON_KERNELS)
    return &detail::kNeonTable;
#endif
    return &detail::kScalarTable;
}

const KernelTable* initial()
{
    if (const char* env = std::getenv("CONCOLIC_SIMD")) {
        const std::string name(env);
        for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
            if (name == isa_name(isa)) {
                if (const KernelTable* t = table_for(isa)) {
                    return t;
                }
            }
        }
    }
    return widest();
}

std::atomic<const KernelTable*>& current()
{
    static std::atomic<const KernelTable*> table{initial()};
    return table;
}

}  // namespace

std::string_view isa_name(Isa isa)
{
    switch (isa) {
    case Isa::Scalar:
        return "scalar";
    case Isa::Avx2:
        return "avx2";
    case Isa::Neon:
        return "neon";
    }
    return "unknown";
}

const KernelTable& scalar_table()
{
    return detail::kScalarTable;
}

const KernelTable* table_for(Isa isa)
{
    switch (isa) {
    case Isa::Scalar:
        return &detail::kScalarTable;
    case Isa::Avx2:
#if defined(CONCOLIC_HAVE_AVX2_KERNELS)
        if (detail::cpu_has_avx2()) {
            return &detail::kAvx2Table;
        }
#endif
        return nullptr;
    case Isa::Neon:
#if defined(CONCOLIC_HAVE_NEON_KERNELS)
        return &detail::kNeonTable;
#else
        return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable& active()
{
    return *current().load(std::memory_order_acquire);
}

bool select(Isa isa)
{
    const KernelTable* t = table_for(isa);
    if (t == nullptr) {
        return false;
    }
    current().store(t, std::memory_order_release);
    return true;
}

std::vector<Isa> available()
{
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
        if (table_for(isa) != nullptr) {
            out.push_back(isa);
        }
    }
    return out;
}

}  // namespace concolic::kernels
