#include "scgn/losses.hpp"

#include <cmath>
#include <cstdio>

namespace scgn {

void LossWeights::validate() const {
    for (double l : {lambda1, lambda2, lambda3})
        if (!(std::isfinite(l) && l >= 0.0))
            throw std::invalid_argument("loss weights must be finite and non-negative");
}

SharpnessConfig SharpnessConfig::for_resolution(int resolution) {
    SharpnessConfig cfg;
    cfg.block_size = std::max(2, 16 * resolution / 224);
    return cfg;
}

void SharpnessConfig::validate() const {
    if (block_size < 2) throw std::invalid_argument("sharpness block_size must be >= 2");
    if (gaussian_kernel < 1 || gaussian_kernel % 2 == 0)
        throw std::invalid_argument("sharpness gaussian_kernel must be odd and positive");
    if (!(gaussian_sigma > 0.0)) throw std::invalid_argument("sharpness gaussian_sigma must be positive");
}

std::string LossReport::csv_header() {
    return "iteration,l_p,l_vc,l_adv,l_sharp,l_g_total,l_disc";
}

std::string LossReport::csv_row(std::int64_t iteration) const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  static_cast<long long>(iteration), l_p, l_vc, l_adv, l_sharp, l_g_total, l_disc);
    return buf;
}

namespace {

void check_batches(const std::vector<Tensor>& a, const std::vector<Tensor>& b, const char* what) {
    if (a.empty()) throw std::invalid_argument(std::string(what) + ": empty batch");
    if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": batch size mismatch");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].same_shape(b[i]))
            throw std::invalid_argument(std::string(what) + ": shape mismatch at element " + std::to_string(i));
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) s += std::abs(a.v[i] - b.v[i]);
    return s / static_cast<double>(a.v.size());
}

std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> taps(size);
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        taps[i] = std::exp(-0.5 * d * d / (sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

// Symmetric reflection with edge repeat: -1 -> 0, -2 -> 1, n -> n-1, ...
int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Separable reflect-padded Gaussian blur of a single channel plane.
std::vector<double> blur_plane(const std::vector<double>& plane, int h, int w,
                               const std::vector<double>& taps) {
    const int half = static_cast<int>(taps.size()) / 2;
    std::vector<double> tmp(plane.size()), out(plane.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = 0; t < static_cast<int>(taps.size()); ++t)
                s += taps[t] * plane[y * w + reflect(x - half + t, w)];
            tmp[y * w + x] = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = 0; t < static_cast<int>(taps.size()); ++t)
                s += taps[t] * tmp[reflect(y - half + t, h) * w + x];
            out[y * w + x] = s;
        }
    return out;
}

// Adjoint of blur_plane (scatter with the same reflected index map).
std::vector<double> blur_plane_adjoint(const std::vector<double>& grad, int h, int w,
                                       const std::vector<double>& taps) {
    const int half = static_cast<int>(taps.size()) / 2;
    std::vector<double> tmp(grad.size(), 0.0), out(grad.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double g = grad[y * w + x];
            for (int t = 0; t < static_cast<int>(taps.size()); ++t)
                tmp[reflect(y - half + t, h) * w + x] += taps[t] * g;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double g = tmp[y * w + x];
            for (int t = 0; t < static_cast<int>(taps.size()); ++t)
                out[y * w + reflect(x - half + t, w)] += taps[t] * g;
        }
    return out;
}

}  // namespace

double pixel_loss(const std::vector<Tensor>& pred, const std::vector<Tensor>& target) {
    check_batches(pred, target, "pixel_loss");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) total += mean_abs_diff(pred[i], target[i]);
    return total / static_cast<double>(pred.size());
}

std::vector<Tensor> pixel_loss_grad(const std::vector<Tensor>& pred, const std::vector<Tensor>& target) {
    check_batches(pred, target, "pixel_loss");
    std::vector<Tensor> grads;
    grads.reserve(pred.size());
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        Tensor g(pred[i].shape);
        const double scale = 1.0 / (n * static_cast<double>(pred[i].v.size()));
        for (std::size_t k = 0; k < g.v.size(); ++k) {
            const double d = pred[i].v[k] - target[i].v[k];
            g.v[k] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

namespace {

double sharpness_q_impl(const Tensor& image, const SharpnessConfig& cfg, Tensor* grad) {
    cfg.validate();
    const int h = image.h(), w = image.w(), c = image.c();
    const int k = cfg.block_size;
    if (h < k || w < k)
        throw std::invalid_argument("sharpness_q: image " + shape_str(image.shape) +
                                    " smaller than one " + std::to_string(k) + "-pixel block");
    const int by = h / k, bx = w / k;
    const double z = static_cast<double>(by) * bx;
    const double nb = static_cast<double>(k) * k;
    const auto taps = gaussian_taps(cfg.gaussian_kernel, cfg.gaussian_sigma);

    double q_sum = 0.0;
    std::vector<double> plane(static_cast<std::size_t>(h) * w);
    for (int ch = 0; ch < c; ++ch) {
        // Map (-1,1) -> [0,1] before block statistics.
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) plane[y * w + x] = (image.at(y, x, ch) + 1.0) * 0.5;
        const auto blurred = blur_plane(plane, h, w, taps);
        std::vector<double> grad_plane, grad_blur;
        if (grad) {
            grad_plane.assign(plane.size(), 0.0);
            grad_blur.assign(plane.size(), 0.0);
        }
        double channel_sum = 0.0;
        for (int byi = 0; byi < by; ++byi) {
            for (int bxi = 0; bxi < bx; ++bxi) {
                double m1 = 0.0, m2 = 0.0, s1 = 0.0, s2 = 0.0;
                for (int y = byi * k; y < (byi + 1) * k; ++y)
                    for (int x = bxi * k; x < (bxi + 1) * k; ++x) {
                        m1 += plane[y * w + x];
                        m2 += blurred[y * w + x];
                    }
                m1 /= nb;
                m2 /= nb;
                for (int y = byi * k; y < (byi + 1) * k; ++y)
                    for (int x = bxi * k; x < (bxi + 1) * k; ++x) {
                        const double d1 = plane[y * w + x] - m1;
                        const double d2 = blurred[y * w + x] - m2;
                        s1 += d1 * d1;
                        s2 += d2 * d2;
                    }
                const double v1 = s1 / nb, v2 = s2 / nb;
                const double diff = v1 - v2;
                channel_sum += std::sqrt(std::abs(diff));
                // d sqrt|v1-v2| = sign(v1-v2)/(2 sqrt|v1-v2|) * (dv1 - dv2);
                // subgradient 0 at the |.|-kink.
                if (grad && diff != 0.0) {
                    const double outer = (diff > 0.0 ? 1.0 : -1.0) / (2.0 * std::sqrt(std::abs(diff)));
                    for (int y = byi * k; y < (byi + 1) * k; ++y)
                        for (int x = bxi * k; x < (bxi + 1) * k; ++x) {
                            const double d1 = plane[y * w + x] - m1;
                            const double d2 = blurred[y * w + x] - m2;
                            grad_plane[y * w + x] += outer * 2.0 * d1 / nb;
                            grad_blur[y * w + x] -= outer * 2.0 * d2 / nb;
                        }
                }
            }
        }
        q_sum += channel_sum / z;
        if (grad) {
            const auto back = blur_plane_adjoint(grad_blur, h, w, taps);
            // Chain the (x+1)/2 range map and the 1/(z*c) block/channel averaging.
            const double scale = 0.5 / (z * c);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    grad->at(y, x, ch) += (grad_plane[y * w + x] + back[y * w + x]) * scale;
        }
    }
    return q_sum / c;
}

}  // namespace

double sharpness_q(const Tensor& image, const SharpnessConfig& cfg) {
    return sharpness_q_impl(image, cfg, nullptr);
}

double sharpness_q_grad(const Tensor& image, const SharpnessConfig& cfg, Tensor& grad) {
    grad = Tensor(image.shape);
    return sharpness_q_impl(image, cfg, &grad);
}

double sharpness_loss(const std::vector<Tensor>& pred, const std::vector<Tensor>& target,
                      const SharpnessConfig& cfg) {
    check_batches(pred, target, "sharpness_loss");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        total += std::abs(sharpness_q(target[i], cfg) - sharpness_q(pred[i], cfg));
    return total / static_cast<double>(pred.size());
}

std::vector<Tensor> sharpness_loss_grad(const std::vector<Tensor>& pred, const std::vector<Tensor>& target,
                                        const SharpnessConfig& cfg) {
    check_batches(pred, target, "sharpness_loss");
    std::vector<Tensor> grads;
    grads.reserve(pred.size());
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        Tensor g(pred[i].shape);
        const double q_pred = sharpness_q_grad(pred[i], cfg, g);
        const double q_tgt = sharpness_q(target[i], cfg);
        // d|q_tgt - q_pred|/d pred = -sign(q_tgt - q_pred) * dq_pred
        const double outer = q_tgt > q_pred ? -1.0 : (q_tgt < q_pred ? 1.0 : 0.0);
        g.scale(outer / n);
        grads.push_back(std::move(g));
    }
    return grads;
}

namespace {

double clamp_prob(double d, const char* what) {
    if (!(d >= 0.0 && d <= 1.0))
        throw std::invalid_argument(std::string(what) + ": probability " + std::to_string(d) +
                                    " outside [0,1]");
    return std::min(std::max(d, kProbEpsilon), 1.0 - kProbEpsilon);
}

}  // namespace

double disc_loss(const std::vector<double>& d_real, const std::vector<double>& d_fake) {
    if (d_real.empty() || d_real.size() != d_fake.size())
        throw std::invalid_argument("disc_loss: batches must be non-empty and equal-sized");
    double total = 0.0;
    for (std::size_t i = 0; i < d_real.size(); ++i)
        total += -std::log(clamp_prob(d_real[i], "disc_loss")) - std::log(1.0 - clamp_prob(d_fake[i], "disc_loss"));
    return total / static_cast<double>(d_real.size());
}

void disc_loss_grad(const std::vector<double>& d_real, const std::vector<double>& d_fake,
                    std::vector<double>& grad_real, std::vector<double>& grad_fake) {
    const double n = static_cast<double>(d_real.size());
    grad_real.resize(d_real.size());
    grad_fake.resize(d_fake.size());
    for (std::size_t i = 0; i < d_real.size(); ++i) {
        const bool r_clamped = d_real[i] < kProbEpsilon || d_real[i] > 1.0 - kProbEpsilon;
        const bool f_clamped = d_fake[i] < kProbEpsilon || d_fake[i] > 1.0 - kProbEpsilon;
        grad_real[i] = r_clamped ? 0.0 : -1.0 / (d_real[i] * n);
        grad_fake[i] = f_clamped ? 0.0 : 1.0 / ((1.0 - d_fake[i]) * n);
    }
}

double adv_loss(const std::vector<double>& d_fake) {
    if (d_fake.empty()) throw std::invalid_argument("adv_loss: empty batch");
    double total = 0.0;
    for (double d : d_fake) total += -std::log(clamp_prob(d, "adv_loss"));
    return total / static_cast<double>(d_fake.size());
}

std::vector<double> adv_loss_grad(const std::vector<double>& d_fake) {
    std::vector<double> grads(d_fake.size());
    const double n = static_cast<double>(d_fake.size());
    for (std::size_t i = 0; i < d_fake.size(); ++i) {
        const bool clamped = d_fake[i] < kProbEpsilon || d_fake[i] > 1.0 - kProbEpsilon;
        grads[i] = clamped ? 0.0 : -1.0 / (d_fake[i] * n);
    }
    return grads;
}

double view_consistency_loss(const std::vector<Tensor>& dec_left, const std::vector<Tensor>& dec_right,
                             const std::vector<Tensor>& left, const std::vector<Tensor>& right) {
    check_batches(dec_left, left, "view_consistency_loss(left)");
    check_batches(dec_right, right, "view_consistency_loss(right)");
    double total = 0.0;
    for (std::size_t i = 0; i < dec_left.size(); ++i)
        total += mean_abs_diff(dec_left[i], left[i]) + mean_abs_diff(dec_right[i], right[i]);
    return total / static_cast<double>(dec_left.size());
}

void view_consistency_loss_grad(const std::vector<Tensor>& dec_left, const std::vector<Tensor>& dec_right,
                                const std::vector<Tensor>& left, const std::vector<Tensor>& right,
                                std::vector<Tensor>& grad_left, std::vector<Tensor>& grad_right) {
    check_batches(dec_left, left, "view_consistency_loss(left)");
    check_batches(dec_right, right, "view_consistency_loss(right)");
    grad_left.clear();
    grad_right.clear();
    const double n = static_cast<double>(dec_left.size());
    auto one_side = [n](const Tensor& dec, const Tensor& ref) {
        Tensor g(dec.shape);
        const double scale = 1.0 / (n * static_cast<double>(dec.v.size()));
        for (std::size_t k = 0; k < g.v.size(); ++k) {
            const double d = dec.v[k] - ref.v[k];
            g.v[k] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
        }
        return g;
    };
    for (std::size_t i = 0; i < dec_left.size(); ++i) {
        grad_left.push_back(one_side(dec_left[i], left[i]));
        grad_right.push_back(one_side(dec_right[i], right[i]));
    }
}

LossReport generator_total(double l_p, double l_vc, double l_adv, double l_sharp, double l_disc,
                           const LossWeights& weights, const AblationFlags& ablation) {
    weights.validate();
    LossReport r;
    r.l_p = l_p;
    r.l_vc = ablation.use_vdn ? l_vc : 0.0;
    r.l_adv = ablation.use_adv ? l_adv : 0.0;
    r.l_sharp = ablation.use_sharp ? l_sharp : 0.0;
    r.l_disc = ablation.use_adv ? l_disc : 0.0;
    for (double x : {r.l_p, r.l_vc, r.l_adv, r.l_sharp, r.l_disc})
        if (!std::isfinite(x)) throw std::runtime_error("generator_total: non-finite loss component");
    r.l_g_total = r.l_p + weights.lambda1 * r.l_vc + weights.lambda2 * r.l_adv + weights.lambda3 * r.l_sharp;
    return r;
}

}  // namespace scgn
