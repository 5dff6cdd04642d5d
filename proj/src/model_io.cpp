#include "concolic/error.hpp"
#include "concolic/format.hpp"
#include "concolic/network.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace concolic {

using nlohmann::json;

namespace {

std::vector<double> get_numbers(const json& arr, const std::string& where)
{
    if (!arr.is_array()) {
        throw ParseError(where + ": expected an array of numbers");
    }
    std::vector<double> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) {
            throw ParseError(where + "[" + std::to_string(i) + "]: not a number");
        }
        out.push_back(arr[i].get<double>());
    }
    return out;
}

std::pair<std::size_t, std::size_t> get_pair(const json& obj, const char* key, std::size_t fallback, const std::string& where)
{
    if (!obj.contains(key)) {
        return {fallback, fallback};
    }
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) {
        return {v.get<std::size_t>(), v.get<std::size_t>()};
    }
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() || !v[1].is_number_unsigned()) {
        throw ParseError(where + ": \"" + key + "\" must be an integer or a pair of integers");
    }
    return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
}

bool get_relu(const json& obj, const std::string& where)
{
    if (!obj.contains("relu")) {
        return false;
    }
    if (!obj.at("relu").is_boolean()) {
        throw ParseError(where + ": \"relu\" must be a boolean");
    }
    return obj.at("relu").get<bool>();
}

DenseLayer parse_dense(const json& obj, const std::string& where)
{
    if (!obj.contains("weights") || !obj.at("weights").is_array() || obj.at("weights").empty()) {
        throw ParseError(where + ": dense layer needs a non-empty \"weights\" matrix");
    }
    DenseLayer d;
    const json& rows = obj.at("weights");
    d.inputs = rows.size();
    for (std::size_t h = 0; h < rows.size(); ++h) {
        std::vector<double> row = get_numbers(rows[h], where + ".weights[" + std::to_string(h) + "]");
        if (h == 0) {
            d.outputs = row.size();
        } else if (row.size() != d.outputs) {
            throw ParseError(where + ": weights row " + std::to_string(h) + " has " + std::to_string(row.size()) +
                             " columns, row 0 has " + std::to_string(d.outputs));
        }
        d.weights.insert(d.weights.end(), row.begin(), row.end());
    }
    if (!obj.contains("bias")) {
        throw ParseError(where + ": dense layer needs \"bias\"");
    }
    d.bias = get_numbers(obj.at("bias"), where + ".bias");
    d.relu = get_relu(obj, where);
    return d;
}

Conv2DLayer parse_conv(const json& obj, const std::string& where)
{
    Conv2DLayer c;
    if (!obj.contains("kernel_shape") || !obj.at("kernel_shape").is_array() || obj.at("kernel_shape").size() != 4) {
        throw ParseError(where + ": conv2d needs \"kernel_shape\" [kh,kw,cin,cout]");
    }
    const json& ks = obj.at("kernel_shape");
    for (const json& s : ks) {
        if (!s.is_number_unsigned()) {
            throw ParseError(where + ": kernel_shape entries must be non-negative integers");
        }
    }
    c.kernel_h = ks[0].get<std::size_t>();
    c.kernel_w = ks[1].get<std::size_t>();
    c.in_channels = ks[2].get<std::size_t>();
    c.out_channels = ks[3].get<std::size_t>();
    if (!obj.contains("kernels") || !obj.contains("bias")) {
        throw ParseError(where + ": conv2d needs \"kernels\" and \"bias\"");
    }
    c.kernels = get_numbers(obj.at("kernels"), where + ".kernels");
    c.bias = get_numbers(obj.at("bias"), where + ".bias");
    std::tie(c.stride_h, c.stride_w) = get_pair(obj, "stride", 1, where);
    std::tie(c.pad_h, c.pad_w) = get_pair(obj, "padding", 0, where);
    c.relu = get_relu(obj, where);
    return c;
}

LayerSpec parse_layer(const json& obj, const std::string& where)
{
    if (!obj.is_object() || !obj.contains("kind") || !obj.at("kind").is_string()) {
        throw ParseError(where + ": layer must be an object with a string \"kind\"");
    }
    const std::string kind = obj.at("kind").get<std::string>();
    if (kind == "dense") {
        return parse_dense(obj, where);
    }
    if (kind == "conv2d") {
        return parse_conv(obj, where);
    }
    if (kind == "maxpool") {
        MaxPoolLayer p;
        std::tie(p.window_h, p.window_w) = get_pair(obj, "window", 2, where);
        return p;
    }
    if (kind == "flatten") {
        return FlattenLayer{};
    }
    throw ParseError(where + ": unknown layer kind \"" + kind + "\"");
}

void write_numbers(std::ostream& os, std::span<const double> values)
{
    os << '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        os << (i ? "," : "") << format_double(values[i]);
    }
    os << ']';
}

void write_pair(std::ostream& os, const char* key, std::size_t a, std::size_t b)
{
    os << ",\"" << key << "\":[" << a << ',' << b << ']';
}

}  // namespace

Network parse_model(const std::string& json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("input_shape") || !doc.contains("layers")) {
        throw ParseError("model must be an object with \"input_shape\" and \"layers\"");
    }
    Shape input_shape;
    const json& is = doc.at("input_shape");
    if (!is.is_array() || is.empty()) {
        throw ParseError("\"input_shape\" must be a non-empty array");
    }
    for (const json& s : is) {
        if (!s.is_number_unsigned()) {
            throw ParseError("\"input_shape\" entries must be non-negative integers");
        }
        input_shape.push_back(s.get<std::size_t>());
    }
    const json& layers = doc.at("layers");
    if (!layers.is_array()) {
        throw ParseError("\"layers\" must be an array");
    }
    std::vector<LayerSpec> specs;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        specs.push_back(parse_layer(layers[i], "layers[" + std::to_string(i) + "]"));
    }
    try {
        return Network(std::move(input_shape), std::move(specs));
    } catch (const ShapeError& e) {
        throw ParseError(std::string("model dimensions: ") + e.what());
    } catch (const DomainError& e) {
        throw ParseError(std::string("model weights: ") + e.what());
    }
}

std::string serialize_model(const Network& net)
{
    std::ostringstream os;
    os << "{\"input_shape\":[";
    for (std::size_t i = 0; i < net.input_shape().size(); ++i) {
        os << (i ? "," : "") << net.input_shape()[i];
    }
    os << "],\n\"layers\":[";
    for (int k = 2; k <= net.layer_count(); ++k) {
        os << (k > 2 ? ",\n" : "\n");
        const LayerSpec& spec = net.layer(k).spec();
        if (const auto* d = std::get_if<DenseLayer>(&spec)) {
            os << "{\"kind\":\"dense\",\"weights\":[";
            for (std::size_t h = 0; h < d->inputs; ++h) {
                os << (h ? "," : "");
                write_numbers(os, std::span<const double>(d->weights).subspan(h * d->outputs, d->outputs));
            }
            os << "],\"bias\":";
            write_numbers(os, d->bias);
            os << ",\"relu\":" << (d->relu ? "true" : "false") << '}';
        } else if (const auto* c = std::get_if<Conv2DLayer>(&spec)) {
            os << "{\"kind\":\"conv2d\",\"kernel_shape\":[" << c->kernel_h << ',' << c->kernel_w << ',' << c->in_channels << ','
               << c->out_channels << "],\"kernels\":";
            write_numbers(os, c->kernels);
            os << ",\"bias\":";
            write_numbers(os, c->bias);
            write_pair(os, "stride", c->stride_h, c->stride_w);
            write_pair(os, "padding", c->pad_h, c->pad_w);
            os << ",\"relu\":" << (c->relu ? "true" : "false") << '}';
        } else if (const auto* p = std::get_if<MaxPoolLayer>(&spec)) {
            os << "{\"kind\":\"maxpool\"";
            write_pair(os, "window", p->window_h, p->window_w);
            os << '}';
        } else {
            os << "{\"kind\":\"flatten\"}";
        }
    }
    os << "\n]}\n";
    return os.str();
}

Network load_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open model file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_model(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_model(const Network& net, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write model file " + path.string());
    }
    out << serialize_model(net);
    if (!out) {
        throw Error("failed writing model file " + path.string());
    }
}

}  // namespace concolic
