#include "concolic/norms.hpp"

#include "concolic/error.hpp"
#include "concolic/kernels.hpp"

namespace concolic {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw ShapeError("distance between vectors of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
}

}  // namespace

double linf_distance(std::span<const double> a, std::span<const double> b)
{
    require_same_length(a, b);
    return kernels::max_abs_diff(a, b);
}

std::size_t l0_distance(std::span<const double> a, std::span<const double> b)
{
    require_same_length(a, b);
    return kernels::count_diff(a, b, kL0Tolerance);
}

double distance(std::span<const double> a, std::span<const double> b, Norm norm)
{
    return norm == Norm::Linf ? linf_distance(a, b) : static_cast<double>(l0_distance(a, b));
}

std::string_view norm_name(Norm norm)
{
    return norm == Norm::Linf ? "linf" : "l0";
}

Norm parse_norm(std::string_view name)
{
    if (name == "linf") {
        return Norm::Linf;
    }
    if (name == "l0") {
        return Norm::L0;
    }
    throw ConfigError("unknown norm \"" + std::string(name) + "\" (expected linf or l0)");
}

}  // namespace concolic
