#pragma once

#include <map>
#include <string>
#include <vector>

#include "scgn/kernels.hpp"
#include "scgn/layer_calculus.hpp"
#include "scgn/tensor.hpp"

namespace scgn {

using ParamMap = std::map<std::string, Tensor>;

/// Activations and per-layer auxiliaries captured by a forward pass, kept for
/// the matching backward pass.
struct StageTrace {
    std::map<std::string, Tensor> value;                      // post-activation output per layer/input name
    std::map<std::string, Tensor> res_hidden;                 // residual blocks: post-leaky inner activation
    std::map<std::string, std::vector<std::int64_t>> pool_argmax;

    const Tensor& out(const std::string& name) const { return value.at(name); }
};

/// Runs a stage forward. `inputs` must bind every declared input at its
/// declared shape. Parameters are read from `params` under `prefix`/<layer>/.
StageTrace stage_forward(const NetworkSpec& spec, const ParamMap& params, const std::string& prefix,
                         const std::map<std::string, Tensor>& inputs);

/// Backpropagates `out_grads` (keyed by layer name) through a traced forward.
/// Parameter gradients accumulate into `grad_accum` (created as zeros on first
/// touch) unless it is null; returns gradients w.r.t. the declared inputs when
/// `want_input_grads` is set (empty map otherwise).
std::map<std::string, Tensor> stage_backward(const NetworkSpec& spec, const ParamMap& params,
                                             const std::string& prefix, const StageTrace& trace,
                                             std::map<std::string, Tensor> out_grads, ParamMap* grad_accum,
                                             bool want_input_grads);

/// Names (in declaration order) of every parameter entry a stage owns,
/// with its shape. Used by initialization, checkpointing, and Adam state.
std::vector<std::pair<std::string, std::vector<int>>> stage_param_entries(const NetworkSpec& spec,
                                                                          const std::string& prefix);

}  // namespace scgn
