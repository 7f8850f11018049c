#include "scgn/graph.hpp"

#include <algorithm>

namespace scgn {

namespace {

std::string pname(const std::string& prefix, const std::string& layer, const char* leaf) {
    return prefix + "/" + layer + "/" + leaf;
}

const Tensor& param(const ParamMap& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw std::runtime_error("missing parameter '" + name + "'");
    return it->second;
}

Tensor& grad_slot(ParamMap& grads, const std::string& name, const std::vector<int>& shape) {
    auto it = grads.find(name);
    if (it == grads.end()) it = grads.emplace(name, Tensor(shape)).first;
    return it->second;
}

ConvGeometry conv_geom(const LayerSpec& l, const Tensor& in, int out_c) {
    return ConvGeometry::same(in.h(), in.w(), in.c(), out_c, l.kernel, l.stride, l.dilation);
}

void unchain_activation(Tensor& g, const Tensor& y, Activation act, double slope) {
    if (act == Activation::none) return;
    for (std::size_t i = 0; i < g.v.size(); ++i)
        g.v[i] *= activation_deriv_from_output(y.v[i], static_cast<int>(act), slope);
}

}  // namespace

StageTrace stage_forward(const NetworkSpec& spec, const ParamMap& params, const std::string& prefix,
                         const std::map<std::string, Tensor>& inputs) {
    StageTrace trace;
    for (const auto& [in_name, in_shape] : spec.inputs) {
        auto it = inputs.find(in_name);
        if (it == inputs.end())
            throw std::invalid_argument("network '" + spec.name + "': input '" + in_name + "' not bound");
        const Tensor& t = it->second;
        if (t.shape != std::vector<int>{in_shape.height, in_shape.width, in_shape.channels})
            throw std::invalid_argument("network '" + spec.name + "': input '" + in_name + "' has shape " +
                                        shape_str(t.shape) + ", expected " + in_shape.str());
        trace.value.emplace(in_name, t);
    }
    for (const auto& l : spec.layers) {
        Tensor out;
        const Tensor& x = trace.out(l.inputs.at(0));
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::dilated_conv: {
                const auto g = conv_geom(l, x, l.out_channels);
                out = conv2d_forward(x, param(params, pname(prefix, l.name, "weight")),
                                     param(params, pname(prefix, l.name, "bias")), g);
                break;
            }
            case LayerKind::projection_1x1: {
                const int oc = l.out_channels > 0 ? l.out_channels : x.c();
                const auto g = ConvGeometry::same(x.h(), x.w(), x.c(), oc, 1, 1, 1);
                out = conv2d_forward(x, param(params, pname(prefix, l.name, "weight")),
                                     param(params, pname(prefix, l.name, "bias")), g);
                break;
            }
            case LayerKind::deconv: {
                const auto ref = deconv_reference(x.h(), x.w(), x.c(), l.out_channels, l.kernel, l.stride);
                out = deconv2d_forward(x, param(params, pname(prefix, l.name, "weight")),
                                       param(params, pname(prefix, l.name, "bias")), ref);
                break;
            }
            case LayerKind::maxpool: {
                std::vector<std::int64_t> argmax;
                out = maxpool_forward(x, l.kernel, l.stride, argmax);
                trace.pool_argmax.emplace(l.name, std::move(argmax));
                break;
            }
            case LayerKind::upsample: {
                const auto mode = l.interp == Interp::bilinear ? InterpMode::bilinear : InterpMode::nearest;
                out = upsample_forward(x, l.stride, mode);
                break;
            }
            case LayerKind::residual_block: {
                const auto g = ConvGeometry::same(x.h(), x.w(), x.c(), x.c(), 3, 1, 1);
                Tensor h1 = conv2d_forward(x, param(params, pname(prefix, l.name, "conv1/weight")),
                                           param(params, pname(prefix, l.name, "conv1/bias")), g);
                apply_activation(h1, static_cast<int>(Activation::leaky_relu), spec.leaky_slope);
                out = conv2d_forward(h1, param(params, pname(prefix, l.name, "conv2/weight")),
                                     param(params, pname(prefix, l.name, "conv2/bias")), g);
                out += x;
                trace.res_hidden.emplace(l.name, std::move(h1));
                break;
            }
            case LayerKind::fully_connected: {
                const Tensor& w = param(params, pname(prefix, l.name, "weight"));
                if (w.shape.at(0) != x.numel())
                    throw std::invalid_argument("fc layer '" + l.name + "': input has " +
                                                std::to_string(x.numel()) + " features, weight expects " +
                                                std::to_string(w.shape.at(0)));
                out = fc_forward(x, w, param(params, pname(prefix, l.name, "bias")));
                break;
            }
            case LayerKind::concat: {
                std::vector<const Tensor*> ins;
                ins.reserve(l.inputs.size());
                for (const auto& n : l.inputs) ins.push_back(&trace.out(n));
                out = concat_forward(ins);
                break;
            }
        }
        apply_activation(out, static_cast<int>(l.activation), spec.leaky_slope);
        trace.value.emplace(l.name, std::move(out));
    }
    return trace;
}

std::map<std::string, Tensor> stage_backward(const NetworkSpec& spec, const ParamMap& params,
                                             const std::string& prefix, const StageTrace& trace,
                                             std::map<std::string, Tensor> out_grads, ParamMap* grad_accum,
                                             bool want_input_grads) {
    auto add_grad = [&out_grads](const std::string& name, Tensor&& g) {
        auto it = out_grads.find(name);
        if (it == out_grads.end()) out_grads.emplace(name, std::move(g));
        else it->second += g;
    };

    for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
        const LayerSpec& l = *it;
        auto git = out_grads.find(l.name);
        if (git == out_grads.end()) continue;  // nothing downstream consumed this layer
        Tensor g = std::move(git->second);
        out_grads.erase(git);
        const Tensor& y = trace.out(l.name);
        unchain_activation(g, y, l.activation, spec.leaky_slope);
        const Tensor& x = trace.out(l.inputs.at(0));
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::dilated_conv:
            case LayerKind::projection_1x1: {
                const int oc = l.kind == LayerKind::projection_1x1 ? (l.out_channels > 0 ? l.out_channels : x.c())
                                                                   : l.out_channels;
                const int k = l.kind == LayerKind::projection_1x1 ? 1 : l.kernel;
                const auto geo = ConvGeometry::same(x.h(), x.w(), x.c(), oc, k,
                                                    l.kind == LayerKind::projection_1x1 ? 1 : l.stride,
                                                    l.kind == LayerKind::projection_1x1 ? 1 : l.dilation);
                const std::string wn = pname(prefix, l.name, "weight"), bn = pname(prefix, l.name, "bias");
                Tensor gi(x.shape);
                if (grad_accum) {
                    conv2d_backward(x, param(params, wn), g, geo, &gi,
                                    &grad_slot(*grad_accum, wn, param(params, wn).shape),
                                    &grad_slot(*grad_accum, bn, param(params, bn).shape));
                } else {
                    conv2d_backward(x, param(params, wn), g, geo, &gi, nullptr, nullptr);
                }
                add_grad(l.inputs[0], std::move(gi));
                break;
            }
            case LayerKind::deconv: {
                const auto ref = deconv_reference(x.h(), x.w(), x.c(), l.out_channels, l.kernel, l.stride);
                const std::string wn = pname(prefix, l.name, "weight"), bn = pname(prefix, l.name, "bias");
                Tensor gi(x.shape);
                if (grad_accum) {
                    deconv2d_backward(x, param(params, wn), g, ref, &gi,
                                      &grad_slot(*grad_accum, wn, param(params, wn).shape),
                                      &grad_slot(*grad_accum, bn, param(params, bn).shape));
                } else {
                    deconv2d_backward(x, param(params, wn), g, ref, &gi, nullptr, nullptr);
                }
                add_grad(l.inputs[0], std::move(gi));
                break;
            }
            case LayerKind::maxpool:
                add_grad(l.inputs[0], maxpool_backward(g, trace.pool_argmax.at(l.name), x.shape));
                break;
            case LayerKind::upsample: {
                const auto mode = l.interp == Interp::bilinear ? InterpMode::bilinear : InterpMode::nearest;
                add_grad(l.inputs[0], upsample_backward(g, l.stride, mode, x.shape));
                break;
            }
            case LayerKind::residual_block: {
                const auto geo = ConvGeometry::same(x.h(), x.w(), x.c(), x.c(), 3, 1, 1);
                const Tensor& h1 = trace.res_hidden.at(l.name);
                const std::string w1 = pname(prefix, l.name, "conv1/weight"), b1 = pname(prefix, l.name, "conv1/bias");
                const std::string w2 = pname(prefix, l.name, "conv2/weight"), b2 = pname(prefix, l.name, "conv2/bias");
                Tensor gh1(h1.shape);
                if (grad_accum) {
                    conv2d_backward(h1, param(params, w2), g, geo, &gh1,
                                    &grad_slot(*grad_accum, w2, param(params, w2).shape),
                                    &grad_slot(*grad_accum, b2, param(params, b2).shape));
                } else {
                    conv2d_backward(h1, param(params, w2), g, geo, &gh1, nullptr, nullptr);
                }
                unchain_activation(gh1, h1, Activation::leaky_relu, spec.leaky_slope);
                Tensor gi(x.shape);
                if (grad_accum) {
                    conv2d_backward(x, param(params, w1), gh1, geo, &gi,
                                    &grad_slot(*grad_accum, w1, param(params, w1).shape),
                                    &grad_slot(*grad_accum, b1, param(params, b1).shape));
                } else {
                    conv2d_backward(x, param(params, w1), gh1, geo, &gi, nullptr, nullptr);
                }
                gi += g;  // identity skip
                add_grad(l.inputs[0], std::move(gi));
                break;
            }
            case LayerKind::fully_connected: {
                const std::string wn = pname(prefix, l.name, "weight"), bn = pname(prefix, l.name, "bias");
                Tensor gi(x.shape);
                if (grad_accum) {
                    fc_backward(x, param(params, wn), g, &gi,
                                &grad_slot(*grad_accum, wn, param(params, wn).shape),
                                &grad_slot(*grad_accum, bn, param(params, bn).shape));
                } else {
                    fc_backward(x, param(params, wn), g, &gi, nullptr, nullptr);
                }
                add_grad(l.inputs[0], std::move(gi));
                break;
            }
            case LayerKind::concat: {
                std::vector<std::vector<int>> shapes;
                shapes.reserve(l.inputs.size());
                for (const auto& n : l.inputs) shapes.push_back(trace.out(n).shape);
                auto parts = concat_backward(g, shapes);
                for (std::size_t i = 0; i < l.inputs.size(); ++i) add_grad(l.inputs[i], std::move(parts[i]));
                break;
            }
        }
    }

    std::map<std::string, Tensor> input_grads;
    if (want_input_grads) {
        for (const auto& [in_name, in_shape] : spec.inputs) {
            auto git = out_grads.find(in_name);
            if (git != out_grads.end()) input_grads.emplace(in_name, std::move(git->second));
            else input_grads.emplace(in_name, Tensor({in_shape.height, in_shape.width, in_shape.channels}));
        }
    }
    return input_grads;
}

std::vector<std::pair<std::string, std::vector<int>>> stage_param_entries(const NetworkSpec& spec,
                                                                          const std::string& prefix) {
    std::vector<std::pair<std::string, std::vector<int>>> entries;
    std::map<std::string, ShapeTriple> shapes;
    for (const auto& [n, s] : spec.inputs) shapes[n] = s;
    for (const auto& l : spec.layers) {
        std::vector<ShapeTriple> in_shapes;
        for (const auto& in : l.inputs) in_shapes.push_back(shapes.at(in));
        const ShapeTriple out = infer_shape(l, in_shapes);
        shapes[l.name] = out;
        const int cin = in_shapes[0].channels;
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::dilated_conv:
                entries.push_back({pname(prefix, l.name, "weight"), {l.kernel, l.kernel, cin, out.channels}});
                entries.push_back({pname(prefix, l.name, "bias"), {out.channels}});
                break;
            case LayerKind::projection_1x1:
                entries.push_back({pname(prefix, l.name, "weight"), {1, 1, cin, out.channels}});
                entries.push_back({pname(prefix, l.name, "bias"), {out.channels}});
                break;
            case LayerKind::deconv:
                entries.push_back({pname(prefix, l.name, "weight"), {l.kernel, l.kernel, out.channels, cin}});
                entries.push_back({pname(prefix, l.name, "bias"), {out.channels}});
                break;
            case LayerKind::residual_block:
                entries.push_back({pname(prefix, l.name, "conv1/weight"), {3, 3, cin, cin}});
                entries.push_back({pname(prefix, l.name, "conv1/bias"), {cin}});
                entries.push_back({pname(prefix, l.name, "conv2/weight"), {3, 3, cin, cin}});
                entries.push_back({pname(prefix, l.name, "conv2/bias"), {cin}});
                break;
            case LayerKind::fully_connected: {
                const int feat = in_shapes[0].height * in_shapes[0].width * in_shapes[0].channels;
                entries.push_back({pname(prefix, l.name, "weight"), {feat, out.channels}});
                entries.push_back({pname(prefix, l.name, "bias"), {out.channels}});
                break;
            }
            default:
                break;
        }
    }
    return entries;
}

}  // namespace scgn
