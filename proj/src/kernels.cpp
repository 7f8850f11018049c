#include "scgn/kernels.hpp"

#include <Eigen/Core>
#include <limits>

#include "scgn/layer_calculus.hpp"

namespace scgn {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using CMapRM = Eigen::Map<const MatrixRM>;

ConvGeometry ConvGeometry::same(int in_h, int in_w, int in_c, int out_c, int kernel, int stride, int dilation) {
    ConvGeometry g;
    g.in_h = in_h;
    g.in_w = in_w;
    g.in_c = in_c;
    g.kernel = kernel;
    g.stride = stride;
    g.dilation = dilation;
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    g.out_c = out_c;
    const int eff = dilation * (kernel - 1) + 1;
    const int pad_h = std::max((g.out_h - 1) * stride + eff - in_h, 0);
    const int pad_w = std::max((g.out_w - 1) * stride + eff - in_w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
    return g;
}

namespace {

// Gathers conv patches into (out_h*out_w, k*k*cin); zeros where taps fall
// outside the image.
void im2col(const Tensor& input, const ConvGeometry& g, MatrixRM& cols) {
    const int k = g.kernel, cin = g.in_c;
    cols.setZero(static_cast<Eigen::Index>(g.out_h) * g.out_w, static_cast<Eigen::Index>(k) * k * cin);
    for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            const Eigen::Index row = static_cast<Eigen::Index>(oy) * g.out_w + ox;
            for (int ky = 0; ky < k; ++ky) {
                const int iy = oy * g.stride - g.pad_top + ky * g.dilation;
                if (iy < 0 || iy >= g.in_h) continue;
                for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * g.stride - g.pad_left + kx * g.dilation;
                    if (ix < 0 || ix >= g.in_w) continue;
                    const double* src = &input.v[(static_cast<std::int64_t>(iy) * g.in_w + ix) * cin];
                    double* dst = &cols(row, (static_cast<Eigen::Index>(ky) * k + kx) * cin);
                    for (int ci = 0; ci < cin; ++ci) dst[ci] = src[ci];
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-adds patch columns back onto the image grid.
void col2im(const MatrixRM& cols, const ConvGeometry& g, Tensor& grad_input) {
    const int k = g.kernel, cin = g.in_c;
    for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            const Eigen::Index row = static_cast<Eigen::Index>(oy) * g.out_w + ox;
            for (int ky = 0; ky < k; ++ky) {
                const int iy = oy * g.stride - g.pad_top + ky * g.dilation;
                if (iy < 0 || iy >= g.in_h) continue;
                for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * g.stride - g.pad_left + kx * g.dilation;
                    if (ix < 0 || ix >= g.in_w) continue;
                    double* dst = &grad_input.v[(static_cast<std::int64_t>(iy) * g.in_w + ix) * cin];
                    const double* src = &cols(row, (static_cast<Eigen::Index>(ky) * k + kx) * cin);
                    for (int ci = 0; ci < cin; ++ci) dst[ci] += src[ci];
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvGeometry& g) {
    MatrixRM cols;
    im2col(input, g, cols);
    CMapRM wmat(weight.v.data(), static_cast<Eigen::Index>(g.kernel) * g.kernel * g.in_c, g.out_c);
    Tensor out({g.out_h, g.out_w, g.out_c});
    MapRM omat(out.v.data(), cols.rows(), g.out_c);
    omat.noalias() = cols * wmat;
    CMapRM bvec(bias.v.data(), 1, g.out_c);
    omat.rowwise() += bvec.row(0);
    return out;
}

void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out, const ConvGeometry& g,
                     Tensor* grad_input, Tensor* grad_weight, Tensor* grad_bias) {
    const Eigen::Index rows = static_cast<Eigen::Index>(g.out_h) * g.out_w;
    const Eigen::Index taps = static_cast<Eigen::Index>(g.kernel) * g.kernel * g.in_c;
    CMapRM gmat(grad_out.v.data(), rows, g.out_c);
    if (grad_bias) {
        MapRM bmat(grad_bias->v.data(), 1, g.out_c);
        bmat.row(0) += gmat.colwise().sum();
    }
    if (grad_weight) {
        MatrixRM cols;
        im2col(input, g, cols);
        MapRM wmat(grad_weight->v.data(), taps, g.out_c);
        wmat.noalias() += cols.transpose() * gmat;
    }
    if (grad_input) {
        CMapRM wmat(weight.v.data(), taps, g.out_c);
        MatrixRM dcols(rows, taps);
        dcols.noalias() = gmat * wmat.transpose();
        col2im(dcols, g, *grad_input);
    }
}

ConvGeometry deconv_reference(int in_h, int in_w, int in_c, int out_c, int kernel, int stride) {
    // Reference conv maps the deconv *output* space back to its input space.
    return ConvGeometry::same(in_h * stride, in_w * stride, out_c, in_c, kernel, stride, 1);
}

Tensor deconv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, const ConvGeometry& ref) {
    // Backward-data pass of the reference conv, plus the deconv's own bias.
    const Eigen::Index rows = static_cast<Eigen::Index>(ref.out_h) * ref.out_w;
    const Eigen::Index taps = static_cast<Eigen::Index>(ref.kernel) * ref.kernel * ref.in_c;
    CMapRM xmat(input.v.data(), rows, ref.out_c);
    CMapRM wmat(weight.v.data(), taps, ref.out_c);
    MatrixRM cols(rows, taps);
    cols.noalias() = xmat * wmat.transpose();
    Tensor out({ref.in_h, ref.in_w, ref.in_c});
    col2im(cols, ref, out);
    const int cout = ref.in_c;
    for (std::int64_t p = 0; p < out.numel(); p += cout)
        for (int c = 0; c < cout; ++c) out.v[p + c] += bias.v[c];
    return out;
}

void deconv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out, const ConvGeometry& ref,
                       Tensor* grad_input, Tensor* grad_weight, Tensor* grad_bias) {
    if (grad_bias) {
        const int cout = ref.in_c;
        for (std::int64_t p = 0; p < grad_out.numel(); p += cout)
            for (int c = 0; c < cout; ++c) grad_bias->v[c] += grad_out.v[p + c];
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(ref.out_h) * ref.out_w;
    const Eigen::Index taps = static_cast<Eigen::Index>(ref.kernel) * ref.kernel * ref.in_c;
    MatrixRM cols;
    if (grad_input || grad_weight) im2col(grad_out, ref, cols);
    if (grad_input) {
        CMapRM wmat(weight.v.data(), taps, ref.out_c);
        MapRM gmat(grad_input->v.data(), rows, ref.out_c);
        gmat.noalias() += cols * wmat;
    }
    if (grad_weight) {
        CMapRM xmat(input.v.data(), rows, ref.out_c);
        MapRM wmat(grad_weight->v.data(), taps, ref.out_c);
        wmat.noalias() += cols.transpose() * xmat;
    }
}

Tensor maxpool_forward(const Tensor& input, int kernel, int stride, std::vector<std::int64_t>& argmax) {
    const ConvGeometry g = ConvGeometry::same(input.h(), input.w(), input.c(), input.c(), kernel, stride, 1);
    Tensor out({g.out_h, g.out_w, g.out_c});
    argmax.assign(out.v.size(), -1);
    for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
            for (int c = 0; c < g.out_c; ++c) {
                double best = -std::numeric_limits<double>::infinity();
                std::int64_t best_idx = -1;
                for (int ky = 0; ky < kernel; ++ky) {
                    const int iy = oy * stride - g.pad_top + ky;
                    if (iy < 0 || iy >= g.in_h) continue;
                    for (int kx = 0; kx < kernel; ++kx) {
                        const int ix = ox * stride - g.pad_left + kx;
                        if (ix < 0 || ix >= g.in_w) continue;
                        const std::int64_t idx = (static_cast<std::int64_t>(iy) * g.in_w + ix) * g.in_c + c;
                        if (input.v[idx] > best) {
                            best = input.v[idx];
                            best_idx = idx;
                        }
                    }
                }
                const std::int64_t o = (static_cast<std::int64_t>(oy) * g.out_w + ox) * g.out_c + c;
                out.v[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
    return out;
}

Tensor maxpool_backward(const Tensor& grad_out, const std::vector<std::int64_t>& argmax,
                        const std::vector<int>& in_shape) {
    Tensor grad_in(in_shape);
    for (std::size_t i = 0; i < grad_out.v.size(); ++i)
        if (argmax[i] >= 0) grad_in.v[argmax[i]] += grad_out.v[i];
    return grad_in;
}

Tensor upsample_forward(const Tensor& input, int scale, InterpMode mode) {
    if (scale == 1) return input;
    const int h = input.h(), w = input.w(), c = input.c();
    Tensor out({h * scale, w * scale, c});
    if (mode == InterpMode::nearest) {
        for (int y = 0; y < h * scale; ++y) {
            const int sy = y / scale;
            for (int x = 0; x < w * scale; ++x) {
                const int sx = x / scale;
                for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = input.at(sy, sx, ch);
            }
        }
        return out;
    }
    // Bilinear with pixel-center alignment: src = (dst + 0.5)/scale - 0.5.
    for (int y = 0; y < h * scale; ++y) {
        const double fy = (y + 0.5) / scale - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, h - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = std::clamp(fy - std::floor(fy), 0.0, 1.0);
        for (int x = 0; x < w * scale; ++x) {
            const double fx = (x + 0.5) / scale - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, w - 1);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = std::clamp(fx - std::floor(fx), 0.0, 1.0);
            for (int ch = 0; ch < c; ++ch) {
                const double top = (1.0 - wx) * input.at(y0, x0, ch) + wx * input.at(y0, x1, ch);
                const double bot = (1.0 - wx) * input.at(y1, x0, ch) + wx * input.at(y1, x1, ch);
                out.at(y, x, ch) = (1.0 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

Tensor upsample_backward(const Tensor& grad_out, int scale, InterpMode mode, const std::vector<int>& in_shape) {
    if (scale == 1) return grad_out;
    Tensor grad_in(in_shape);
    const int h = in_shape[0], w = in_shape[1], c = in_shape[2];
    if (mode == InterpMode::nearest) {
        for (int y = 0; y < grad_out.h(); ++y) {
            const int sy = y / scale;
            for (int x = 0; x < grad_out.w(); ++x) {
                const int sx = x / scale;
                for (int ch = 0; ch < c; ++ch) grad_in.at(sy, sx, ch) += grad_out.at(y, x, ch);
            }
        }
        return grad_in;
    }
    for (int y = 0; y < grad_out.h(); ++y) {
        const double fy = (y + 0.5) / scale - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, h - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = std::clamp(fy - std::floor(fy), 0.0, 1.0);
        for (int x = 0; x < grad_out.w(); ++x) {
            const double fx = (x + 0.5) / scale - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, w - 1);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = std::clamp(fx - std::floor(fx), 0.0, 1.0);
            for (int ch = 0; ch < c; ++ch) {
                const double g = grad_out.at(y, x, ch);
                grad_in.at(y0, x0, ch) += (1.0 - wy) * (1.0 - wx) * g;
                grad_in.at(y0, x1, ch) += (1.0 - wy) * wx * g;
                grad_in.at(y1, x0, ch) += wy * (1.0 - wx) * g;
                grad_in.at(y1, x1, ch) += wy * wx * g;
            }
        }
    }
    return grad_in;
}

Tensor fc_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    const Eigen::Index in_f = weight.shape[0], out_f = weight.shape[1];
    CMapRM x(input.v.data(), 1, in_f);
    CMapRM wmat(weight.v.data(), in_f, out_f);
    Tensor out({1, 1, static_cast<int>(out_f)});
    MapRM o(out.v.data(), 1, out_f);
    o.noalias() = x * wmat;
    CMapRM b(bias.v.data(), 1, out_f);
    o += b;
    return out;
}

void fc_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out,
                 Tensor* grad_input, Tensor* grad_weight, Tensor* grad_bias) {
    const Eigen::Index in_f = weight.shape[0], out_f = weight.shape[1];
    CMapRM g(grad_out.v.data(), 1, out_f);
    if (grad_bias) {
        MapRM b(grad_bias->v.data(), 1, out_f);
        b += g;
    }
    if (grad_weight) {
        CMapRM x(input.v.data(), 1, in_f);
        MapRM wmat(grad_weight->v.data(), in_f, out_f);
        wmat.noalias() += x.transpose() * g;
    }
    if (grad_input) {
        CMapRM wmat(weight.v.data(), in_f, out_f);
        MapRM gi(grad_input->v.data(), 1, in_f);
        gi.noalias() += g * wmat.transpose();
    }
}

Tensor concat_forward(const std::vector<const Tensor*>& inputs) {
    const int h = inputs[0]->h(), w = inputs[0]->w();
    int channels = 0;
    for (const Tensor* t : inputs) {
        if (t->h() != h || t->w() != w) throw std::invalid_argument("concat spatial mismatch");
        channels += t->c();
    }
    Tensor out({h, w, channels});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int base = 0;
            for (const Tensor* t : inputs) {
                for (int ch = 0; ch < t->c(); ++ch) out.at(y, x, base + ch) = t->at(y, x, ch);
                base += t->c();
            }
        }
    return out;
}

std::vector<Tensor> concat_backward(const Tensor& grad_out, const std::vector<std::vector<int>>& in_shapes) {
    std::vector<Tensor> grads;
    grads.reserve(in_shapes.size());
    for (const auto& s : in_shapes) grads.emplace_back(s);
    const int h = grad_out.h(), w = grad_out.w();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int base = 0;
            for (Tensor& g : grads) {
                for (int ch = 0; ch < g.c(); ++ch) g.at(y, x, ch) = grad_out.at(y, x, base + ch);
                base += g.c();
            }
        }
    return grads;
}

void apply_activation(Tensor& t, int activation_tag, double leaky_slope) {
    const auto act = static_cast<Activation>(activation_tag);
    switch (act) {
        case Activation::none:
            return;
        case Activation::relu:
            for (double& x : t.v) x = x > 0.0 ? x : 0.0;
            return;
        case Activation::leaky_relu:
            for (double& x : t.v) x = x > 0.0 ? x : leaky_slope * x;
            return;
        case Activation::tanh:
            for (double& x : t.v) x = std::tanh(x);
            return;
        case Activation::sigmoid:
            for (double& x : t.v) x = 1.0 / (1.0 + std::exp(-x));
            return;
    }
}

double activation_deriv_from_output(double y, int activation_tag, double leaky_slope) {
    switch (static_cast<Activation>(activation_tag)) {
        case Activation::none: return 1.0;
        case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::leaky_relu: return y > 0.0 ? 1.0 : (y < 0.0 ? leaky_slope : 1.0);
        case Activation::tanh: return 1.0 - y * y;
        case Activation::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

}  // namespace scgn
