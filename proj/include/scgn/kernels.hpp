#pragma once

#include <vector>

#include "scgn/tensor.hpp"

namespace scgn {

/// Zero "same" padding in the TensorFlow convention: out = ceil(in / stride),
/// pad_total = max((out-1)*stride + eff_kernel - in, 0), with the extra pixel
/// (when pad_total is odd) on the bottom/right.
struct ConvGeometry {
    int in_h = 0, in_w = 0, in_c = 0;
    int kernel = 0, stride = 1, dilation = 1;
    int out_h = 0, out_w = 0, out_c = 0;
    int pad_top = 0, pad_left = 0;

    static ConvGeometry same(int in_h, int in_w, int in_c, int out_c, int kernel, int stride, int dilation);
};

/// input (h,w,cin), weight (k,k,cin,cout), bias (cout) -> (out_h,out_w,cout).
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvGeometry& g);

/// Gradients of a same-padded convolution. Any of the output pointers may be
/// null to skip that computation.
void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out, const ConvGeometry& g,
                     Tensor* grad_input, Tensor* grad_weight, Tensor* grad_bias);

/// Transposed convolution: input (h,w,cin) -> (h*stride, w*stride, cout).
/// Weight layout (k,k,cout,cin) — the kernel of the conv this op transposes.
Tensor deconv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvGeometry& ref);
void deconv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out, const ConvGeometry& ref,
                       Tensor* grad_input, Tensor* grad_weight, Tensor* grad_bias);
/// Geometry of the reference convolution (out-space -> in-space) for a deconv.
ConvGeometry deconv_reference(int in_h, int in_w, int in_c, int out_c, int kernel, int stride);

/// Max pooling over k×k windows, same-padded like conv; windows never read
/// outside the image (out-of-range taps are skipped, not padded with a value).
/// `argmax` records the winning input offset per output element for backward.
Tensor maxpool_forward(const Tensor& input, int kernel, int stride, std::vector<std::int64_t>& argmax);
Tensor maxpool_backward(const Tensor& grad_out, const std::vector<std::int64_t>& argmax, const std::vector<int>& in_shape);

enum class InterpMode { nearest, bilinear };

Tensor upsample_forward(const Tensor& input, int scale, InterpMode mode);
Tensor upsample_backward(const Tensor& grad_out, int scale, InterpMode mode, const std::vector<int>& in_shape);

/// input flattened (h*w*c), weight (in,out), bias (out) -> (1,1,out).
Tensor fc_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);
void fc_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out,
                 Tensor* grad_input, Tensor* grad_weight, Tensor* grad_bias);

Tensor concat_forward(const std::vector<const Tensor*>& inputs);
std::vector<Tensor> concat_backward(const Tensor& grad_out, const std::vector<std::vector<int>>& in_shapes);

/// Elementwise activations, evaluated in place. Derivatives are recovered from
/// the *output* value (valid for all four nonlinearities used here).
void apply_activation(Tensor& t, int activation_tag, double leaky_slope);
double activation_deriv_from_output(double y, int activation_tag, double leaky_slope);

}  // namespace scgn
