// Text formats for numbers and input vectors.
#pragma once

#include "concolic/network.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace concolic {

/// 17 significant digits: parses back to the identical double.
std::string format_double(double x);

/// A `.vec` file holds one input: whitespace-separated decimal float64 values.
void write_vector(const std::filesystem::path& path, std::span<const double> values);
Vector read_vector(const std::filesystem::path& path);

struct InputSet {
    std::vector<Vector> inputs;
    /// Present when the source carried trusted labels.
    std::optional<std::vector<std::size_t>> labels;
};

/// Loads inputs from a `.vec` file, a directory of `.vec` files (sorted by
/// name), or a JSON file {"inputs": [[...], ...], "labels": [...]}.
InputSet load_inputs(const std::filesystem::path& path);

/// Rounds each value to the nearest multiple of 1/steps (steps > 0).
void quantize(std::span<double> values, int steps);

}  // namespace concolic
