#include "concolic/format.hpp"

#include "concolic/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace concolic {

std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_vector(const std::filesystem::path& path, std::span<const double> values)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << format_double(values[i]) << '\n';
    }
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

Vector read_vector(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    Vector out;
    std::string token;
    while (in >> token) {
        double x = 0.0;
        const char* end = token.data() + token.size();
        const auto [ptr, ec] = std::from_chars(token.data(), end, x);
        const bool underflow = ec == std::errc::result_out_of_range && std::abs(x) < 1.0;
        if ((ec != std::errc{} && !underflow) || ptr != end || !std::isfinite(x)) {
            throw ParseError(path.string() + ": value " + std::to_string(out.size()) + " (\"" + token + "\") is not a finite number");
        }
        out.push_back(x);
    }
    if (out.empty()) {
        throw ParseError(path.string() + ": empty vector file");
    }
    return out;
}

namespace {

InputSet load_json_inputs(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("inputs") || !doc.at("inputs").is_array()) {
        throw ParseError(path.string() + ": expected {\"inputs\": [[...], ...]}");
    }
    InputSet set;
    for (std::size_t i = 0; i < doc.at("inputs").size(); ++i) {
        const auto& row = doc.at("inputs")[i];
        if (!row.is_array()) {
            throw ParseError(path.string() + ": inputs[" + std::to_string(i) + "] is not an array");
        }
        Vector v;
        for (const auto& x : row) {
            if (!x.is_number()) {
                throw ParseError(path.string() + ": inputs[" + std::to_string(i) + "] holds a non-number");
            }
            v.push_back(x.get<double>());
        }
        set.inputs.push_back(std::move(v));
    }
    if (doc.contains("labels")) {
        const auto& labels = doc.at("labels");
        if (!labels.is_array() || labels.size() != set.inputs.size()) {
            throw ParseError(path.string() + ": \"labels\" must have one entry per input");
        }
        std::vector<std::size_t> out;
        for (const auto& l : labels) {
            if (!l.is_number_unsigned()) {
                throw ParseError(path.string() + ": labels must be non-negative integers");
            }
            out.push_back(l.get<std::size_t>());
        }
        set.labels = std::move(out);
    }
    return set;
}

}  // namespace

InputSet load_inputs(const std::filesystem::path& path)
{
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".vec") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            throw ParseError(path.string() + ": directory holds no .vec files");
        }
        InputSet set;
        for (const auto& f : files) {
            set.inputs.push_back(read_vector(f));
        }
        return set;
    }
    if (!fs::exists(path)) {
        throw ParseError("no such input file or directory: " + path.string());
    }
    if (path.extension() == ".json") {
        return load_json_inputs(path);
    }
    InputSet set;
    set.inputs.push_back(read_vector(path));
    return set;
}

void quantize(std::span<double> values, int steps)
{
    const double s = static_cast<double>(steps);
    for (double& x : values) {
        x = std::round(x * s) / s;
    }
}

}  // namespace concolic
