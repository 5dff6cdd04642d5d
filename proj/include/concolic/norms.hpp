#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace concolic {

enum class Norm { Linf, L0 };

/// Two coordinates count as different for L0 when they differ by more than
/// half a step of the 8-bit grid.
inline constexpr double kL0Tolerance = 1.0 / 510.0;

double distance(std::span<const double> a, std::span<const double> b, Norm norm);
std::size_t l0_distance(std::span<const double> a, std::span<const double> b);
double linf_distance(std::span<const double> a, std::span<const double> b);

std::string_view norm_name(Norm norm);
/// Accepts "linf" and "l0"; throws ConfigError otherwise.
Norm parse_norm(std::string_view name);

}  // namespace concolic
