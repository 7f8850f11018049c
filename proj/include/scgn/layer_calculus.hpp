#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scgn/tensor.hpp"

namespace scgn {

/// Spatial-size/channel triple used by the shape calculus.
struct ShapeTriple {
    int height = 0;
    int width = 0;
    int channels = 0;

    bool operator==(const ShapeTriple&) const = default;
    std::string str() const;
    void validate() const;  // all strictly positive
};

enum class LayerKind {
    conv,
    dilated_conv,
    deconv,
    maxpool,
    upsample,
    residual_block,
    fully_connected,
    concat,
    projection_1x1,
};

enum class Activation { leaky_relu, relu, tanh, sigmoid, none };

const char* to_string(LayerKind k);
const char* to_string(Activation a);
LayerKind layer_kind_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

enum class Interp { nearest, bilinear };

/// One declarative layer. Depending on kind, some fields are unused:
/// maxpool/upsample/concat carry no trainable parameters; upsample reuses
/// `stride` as its spatial scale factor; dilation is dilated_conv-only.
struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::conv;
    int kernel = 0;        // 0 = absent (upsample/concat)
    int stride = 1;
    int dilation = 1;
    int out_channels = 0;  // 0 = absent (maxpool/upsample/concat default; projection preserves input)
    Activation activation = Activation::none;
    Interp interp = Interp::nearest;  // upsample only
    std::vector<std::string> inputs;

    bool has_params() const;
    void validate() const;  // field-level invariants
};

/// A stage of a network: an ordered, acyclic layer list over named inputs.
/// Declaration order is topological (layers may only reference earlier names).
struct NetworkSpec {
    std::string name;
    double leaky_slope = 0.2;
    std::vector<std::pair<std::string, ShapeTriple>> inputs;
    std::vector<LayerSpec> layers;
    std::vector<std::pair<std::string, std::string>> outputs;  // output name -> layer name

    const LayerSpec* find_layer(const std::string& n) const;
    void validate() const;

    std::string to_json() const;
    static NetworkSpec from_json(const std::string& text);
};

/// Output shape of a single layer given its input shapes.
/// Convolutions use zero "same" padding: stride-1 layers preserve spatial size,
/// stride-s layers emit ceil(n/s); maxpool follows the same rule; upsample and
/// stride-s deconv multiply spatial size by their stride; concat sums channels.
ShapeTriple infer_shape(const LayerSpec& spec, const std::vector<ShapeTriple>& in_shapes);

/// Shapes of every layer in declaration order.
std::vector<std::pair<std::string, ShapeTriple>> infer_all_shapes(const NetworkSpec& spec);

/// Trainable parameter count (weights + biases) for one layer.
std::int64_t count_layer_params(const LayerSpec& spec, const std::vector<ShapeTriple>& in_shapes);

/// Trainable parameter count for a whole stage.
std::int64_t count_params(const NetworkSpec& spec);

struct ShapeCheckRow {
    std::string layer;
    ShapeTriple expected;
    ShapeTriple inferred;
    bool pass = false;
};

struct ShapeCheckReport {
    std::vector<ShapeCheckRow> rows;
    bool all_pass() const;
};

/// Compares inferred shapes against an expected (layer, shape) list.
/// Throws if an expected name does not exist in the spec.
ShapeCheckReport validate_against_table(const NetworkSpec& spec,
                                        const std::vector<std::pair<std::string, ShapeTriple>>& expected);

}  // namespace scgn
