#include "scgn/layer_calculus.hpp"

#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace scgn {

using nlohmann::json;

std::string ShapeTriple::str() const {
    std::ostringstream os;
    os << height << "x" << width << "x" << channels;
    return os.str();
}

void ShapeTriple::validate() const {
    if (height <= 0 || width <= 0 || channels <= 0)
        throw std::invalid_argument("shape " + str() + " has a non-positive dimension");
}

const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::dilated_conv: return "dilated_conv";
        case LayerKind::deconv: return "deconv";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::upsample: return "upsample";
        case LayerKind::residual_block: return "residual_block";
        case LayerKind::fully_connected: return "fully_connected";
        case LayerKind::concat: return "concat";
        case LayerKind::projection_1x1: return "projection_1x1";
    }
    return "?";
}

const char* to_string(Activation a) {
    switch (a) {
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::none: return "none";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    static const std::map<std::string, LayerKind> table = {
        {"conv", LayerKind::conv},
        {"dilated_conv", LayerKind::dilated_conv},
        {"deconv", LayerKind::deconv},
        {"maxpool", LayerKind::maxpool},
        {"upsample", LayerKind::upsample},
        {"residual_block", LayerKind::residual_block},
        {"fully_connected", LayerKind::fully_connected},
        {"concat", LayerKind::concat},
        {"projection_1x1", LayerKind::projection_1x1},
    };
    auto it = table.find(s);
    if (it == table.end()) throw std::invalid_argument("unknown layer kind '" + s + "'");
    return it->second;
}

Activation activation_from_string(const std::string& s) {
    static const std::map<std::string, Activation> table = {
        {"leaky_relu", Activation::leaky_relu}, {"relu", Activation::relu},
        {"tanh", Activation::tanh},             {"sigmoid", Activation::sigmoid},
        {"none", Activation::none},
    };
    auto it = table.find(s);
    if (it == table.end()) throw std::invalid_argument("unknown activation '" + s + "'");
    return it->second;
}

bool LayerSpec::has_params() const {
    switch (kind) {
        case LayerKind::maxpool:
        case LayerKind::upsample:
        case LayerKind::concat:
            return false;
        default:
            return true;
    }
}

void LayerSpec::validate() const {
    if (name.empty()) throw std::invalid_argument("layer with empty name");
    const std::string where = "layer '" + name + "': ";
    if (stride < 1) throw std::invalid_argument(where + "stride must be positive");
    if (dilation < 1) throw std::invalid_argument(where + "dilation must be positive");
    switch (kind) {
        case LayerKind::dilated_conv:
            if (dilation < 2) throw std::invalid_argument(where + "dilated_conv requires dilation >= 2");
            [[fallthrough]];
        case LayerKind::conv:
        case LayerKind::deconv:
            if (kernel < 1) throw std::invalid_argument(where + "kernel required");
            if (out_channels < 1) throw std::invalid_argument(where + "out_channels required");
            break;
        case LayerKind::maxpool:
            if (kernel < 1) throw std::invalid_argument(where + "kernel required");
            break;
        case LayerKind::upsample:
        case LayerKind::concat:
            if (kernel != 0) throw std::invalid_argument(where + "kernel not applicable");
            break;
        case LayerKind::residual_block:
            break;  // channel-preserving, internal 3x3 convs
        case LayerKind::fully_connected:
            if (out_channels < 1) throw std::invalid_argument(where + "out_channels required");
            break;
        case LayerKind::projection_1x1:
            break;  // out_channels optional: preserves input width by default
    }
    if (kind == LayerKind::concat) {
        if (inputs.size() < 2) throw std::invalid_argument(where + "concat needs at least two inputs");
    } else if (inputs.size() != 1) {
        throw std::invalid_argument(where + "expects exactly one input");
    }
    if (dilation > 1 && kind != LayerKind::dilated_conv)
        throw std::invalid_argument(where + "dilation only applies to dilated_conv");
}

namespace {

int ceil_div(int n, int s) { return (n + s - 1) / s; }

void expect_arity(const LayerSpec& spec, const std::vector<ShapeTriple>& in, std::size_t n) {
    if (in.size() != n)
        throw std::invalid_argument("layer '" + spec.name + "': expected " + std::to_string(n) +
                                    " input shape(s), got " + std::to_string(in.size()));
}

}  // namespace

ShapeTriple infer_shape(const LayerSpec& spec, const std::vector<ShapeTriple>& in_shapes) {
    spec.validate();
    for (const auto& s : in_shapes) s.validate();
    ShapeTriple out;
    switch (spec.kind) {
        case LayerKind::conv:
        case LayerKind::dilated_conv: {
            expect_arity(spec, in_shapes, 1);
            const auto& in = in_shapes[0];
            out = {ceil_div(in.height, spec.stride), ceil_div(in.width, spec.stride), spec.out_channels};
            break;
        }
        case LayerKind::deconv: {
            expect_arity(spec, in_shapes, 1);
            const auto& in = in_shapes[0];
            out = {in.height * spec.stride, in.width * spec.stride, spec.out_channels};
            break;
        }
        case LayerKind::maxpool: {
            expect_arity(spec, in_shapes, 1);
            const auto& in = in_shapes[0];
            out = {ceil_div(in.height, spec.stride), ceil_div(in.width, spec.stride), in.channels};
            break;
        }
        case LayerKind::upsample: {
            expect_arity(spec, in_shapes, 1);
            const auto& in = in_shapes[0];
            out = {in.height * spec.stride, in.width * spec.stride, in.channels};
            break;
        }
        case LayerKind::residual_block: {
            expect_arity(spec, in_shapes, 1);
            out = in_shapes[0];
            break;
        }
        case LayerKind::fully_connected: {
            expect_arity(spec, in_shapes, 1);
            out = {1, 1, spec.out_channels};
            break;
        }
        case LayerKind::concat: {
            if (in_shapes.size() < 2)
                throw std::invalid_argument("layer '" + spec.name + "': concat needs >= 2 inputs");
            out = in_shapes[0];
            for (std::size_t i = 1; i < in_shapes.size(); ++i) {
                if (in_shapes[i].height != out.height || in_shapes[i].width != out.width)
                    throw std::invalid_argument("layer '" + spec.name + "': concat spatial mismatch " +
                                                out.str() + " vs " + in_shapes[i].str());
                out.channels += in_shapes[i].channels;
            }
            break;
        }
        case LayerKind::projection_1x1: {
            expect_arity(spec, in_shapes, 1);
            const auto& in = in_shapes[0];
            out = {in.height, in.width, spec.out_channels > 0 ? spec.out_channels : in.channels};
            break;
        }
    }
    out.validate();
    return out;
}

std::int64_t count_layer_params(const LayerSpec& spec, const std::vector<ShapeTriple>& in_shapes) {
    if (!spec.has_params()) return 0;
    const ShapeTriple out = infer_shape(spec, in_shapes);
    const int cin = in_shapes.at(0).channels;
    switch (spec.kind) {
        case LayerKind::conv:
        case LayerKind::dilated_conv:
        case LayerKind::deconv:
            return static_cast<std::int64_t>(spec.kernel) * spec.kernel * cin * out.channels + out.channels;
        case LayerKind::projection_1x1:
            return static_cast<std::int64_t>(cin) * out.channels + out.channels;
        case LayerKind::residual_block:
            // two 3x3 channel-preserving convs
            return 2 * (static_cast<std::int64_t>(3) * 3 * cin * cin + cin);
        case LayerKind::fully_connected: {
            const auto& in = in_shapes.at(0);
            const std::int64_t feat = static_cast<std::int64_t>(in.height) * in.width * in.channels;
            return feat * out.channels + out.channels;
        }
        default:
            return 0;
    }
}

const LayerSpec* NetworkSpec::find_layer(const std::string& n) const {
    for (const auto& l : layers)
        if (l.name == n) return &l;
    return nullptr;
}

void NetworkSpec::validate() const {
    std::set<std::string> known;
    for (const auto& [n, s] : inputs) {
        s.validate();
        if (!known.insert(n).second) throw std::invalid_argument("duplicate input name '" + n + "'");
    }
    for (const auto& l : layers) {
        l.validate();
        for (const auto& in : l.inputs)
            if (!known.count(in))
                throw std::invalid_argument("layer '" + l.name + "' references unknown name '" + in + "'");
        if (!known.insert(l.name).second)
            throw std::invalid_argument("duplicate layer name '" + l.name + "'");
    }
    if (outputs.empty()) throw std::invalid_argument("network '" + name + "' declares no outputs");
    // Every output must be a layer reachable from some input.
    std::set<std::string> reachable;
    for (const auto& [n, s] : inputs) reachable.insert(n);
    for (const auto& l : layers)
        for (const auto& in : l.inputs)
            if (reachable.count(in)) { reachable.insert(l.name); break; }
    for (const auto& [out_name, layer_name] : outputs) {
        if (!find_layer(layer_name))
            throw std::invalid_argument("output '" + out_name + "' references unknown layer '" + layer_name + "'");
        if (!reachable.count(layer_name))
            throw std::invalid_argument("output layer '" + layer_name + "' is not reachable from any input");
    }
}

std::vector<std::pair<std::string, ShapeTriple>> infer_all_shapes(const NetworkSpec& spec) {
    spec.validate();
    std::map<std::string, ShapeTriple> known;
    for (const auto& [n, s] : spec.inputs) known[n] = s;
    std::vector<std::pair<std::string, ShapeTriple>> result;
    result.reserve(spec.layers.size());
    for (const auto& l : spec.layers) {
        std::vector<ShapeTriple> in_shapes;
        in_shapes.reserve(l.inputs.size());
        for (const auto& in : l.inputs) in_shapes.push_back(known.at(in));
        const ShapeTriple out = infer_shape(l, in_shapes);
        known[l.name] = out;
        result.emplace_back(l.name, out);
    }
    return result;
}

std::int64_t count_params(const NetworkSpec& spec) {
    spec.validate();
    std::map<std::string, ShapeTriple> known;
    for (const auto& [n, s] : spec.inputs) known[n] = s;
    std::int64_t total = 0;
    for (const auto& l : spec.layers) {
        std::vector<ShapeTriple> in_shapes;
        for (const auto& in : l.inputs) in_shapes.push_back(known.at(in));
        total += count_layer_params(l, in_shapes);
        known[l.name] = infer_shape(l, in_shapes);
    }
    return total;
}

bool ShapeCheckReport::all_pass() const {
    for (const auto& r : rows)
        if (!r.pass) return false;
    return true;
}

ShapeCheckReport validate_against_table(const NetworkSpec& spec,
                                        const std::vector<std::pair<std::string, ShapeTriple>>& expected) {
    const auto shapes = infer_all_shapes(spec);
    std::map<std::string, ShapeTriple> by_name(shapes.begin(), shapes.end());
    ShapeCheckReport report;
    for (const auto& [layer, want] : expected) {
        auto it = by_name.find(layer);
        if (it == by_name.end())
            throw std::invalid_argument("expected layer '" + layer + "' not present in network '" + spec.name + "'");
        report.rows.push_back({layer, want, it->second, it->second == want});
    }
    return report;
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

json layer_to_json(const LayerSpec& l) {
    json j;
    j["name"] = l.name;
    j["kind"] = to_string(l.kind);
    if (l.kernel > 0) j["kernel"] = l.kernel;
    j["stride"] = l.stride;
    if (l.kind == LayerKind::dilated_conv) j["dilation"] = l.dilation;
    if (l.out_channels > 0) j["out_channels"] = l.out_channels;
    j["activation"] = to_string(l.activation);
    if (l.kind == LayerKind::upsample && l.interp == Interp::bilinear) j["interp"] = "bilinear";
    j["inputs"] = l.inputs;
    return j;
}

LayerSpec layer_from_json(const json& j) {
    LayerSpec l;
    l.name = j.at("name").get<std::string>();
    l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
    l.kernel = j.value("kernel", 0);
    l.stride = j.value("stride", 1);
    l.dilation = j.value("dilation", 1);
    l.out_channels = j.value("out_channels", 0);
    l.activation = activation_from_string(j.value("activation", "none"));
    const std::string interp = j.value("interp", "nearest");
    if (interp == "bilinear") l.interp = Interp::bilinear;
    else if (interp != "nearest") throw std::invalid_argument("unknown interp '" + interp + "'");
    l.inputs = j.at("inputs").get<std::vector<std::string>>();
    return l;
}

}  // namespace

std::string NetworkSpec::to_json() const {
    json j;
    j["name"] = name;
    j["leaky_slope"] = leaky_slope;
    j["inputs"] = json::array();
    for (const auto& [n, s] : inputs)
        j["inputs"].push_back({{"name", n}, {"height", s.height}, {"width", s.width}, {"channels", s.channels}});
    j["layers"] = json::array();
    for (const auto& l : layers) j["layers"].push_back(layer_to_json(l));
    j["outputs"] = json::object();
    for (const auto& [n, layer] : outputs) j["outputs"][n] = layer;
    return j.dump(2);
}

NetworkSpec NetworkSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed network spec json: ") + e.what());
    }
    NetworkSpec spec;
    spec.name = j.value("name", "");
    spec.leaky_slope = j.value("leaky_slope", 0.2);
    for (const auto& in : j.at("inputs"))
        spec.inputs.emplace_back(in.at("name").get<std::string>(),
                                 ShapeTriple{in.at("height").get<int>(), in.at("width").get<int>(),
                                             in.at("channels").get<int>()});
    for (const auto& l : j.at("layers")) spec.layers.push_back(layer_from_json(l));
    // json objects iterate in sorted key order; preserve that deterministic order.
    for (const auto& [k, v] : j.at("outputs").items()) spec.outputs.emplace_back(k, v.get<std::string>());
    spec.validate();
    return spec;
}

}  // namespace scgn
