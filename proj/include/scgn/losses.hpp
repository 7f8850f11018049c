#pragma once

#include <string>
#include <vector>

#include "scgn/ablation.hpp"
#include "scgn/tensor.hpp"

namespace scgn {

/// Balancing weights of the composite generator loss
/// L_G = L_p + lambda1*L_vc + lambda2*L_adv + lambda3*L_sharp.
struct LossWeights {
    double lambda1 = 0.01;   // view consistency
    double lambda2 = 0.001;  // adversarial
    double lambda3 = 0.01;   // sharpness

    void validate() const;
};

/// Block-wise sharpness criterion settings. The criterion compares per-block
/// population standard deviations of an image and its Gaussian-reblurred copy
/// on non-overlapping block_size^2 blocks, per channel, channels averaged.
/// Images are mapped (-1,1) -> [0,1] before the block statistics.
struct SharpnessConfig {
    int block_size = 16;
    int gaussian_kernel = 7;
    double gaussian_sigma = 1.5;

    /// block_size 16 at resolution 224, scaled proportionally (min 2).
    static SharpnessConfig for_resolution(int resolution);
    void validate() const;
};

struct LossReport {
    double l_p = 0.0;
    double l_vc = 0.0;
    double l_adv = 0.0;
    double l_sharp = 0.0;
    double l_g_total = 0.0;
    double l_disc = 0.0;

    struct PerImage {
        double l_p = 0.0, l_vc = 0.0, l_adv = 0.0, l_sharp = 0.0;
    };
    std::vector<PerImage> per_image;

    static std::string csv_header();
    std::string csv_row(std::int64_t iteration) const;
};

/// Mean over the batch of the per-image mean absolute pixel difference.
double pixel_loss(const std::vector<Tensor>& pred, const std::vector<Tensor>& target);
/// d(pixel_loss)/d(pred_i): sign(pred-target) / (pixels * n).
std::vector<Tensor> pixel_loss_grad(const std::vector<Tensor>& pred, const std::vector<Tensor>& target);

/// Block-wise sharpness Q_S of one image.
double sharpness_q(const Tensor& image, const SharpnessConfig& cfg);
/// Q_S and its gradient w.r.t. the (-1,1)-range input image.
double sharpness_q_grad(const Tensor& image, const SharpnessConfig& cfg, Tensor& grad);

/// Mean over the batch of |Q_S(target_i) - Q_S(pred_i)|.
double sharpness_loss(const std::vector<Tensor>& pred, const std::vector<Tensor>& target,
                      const SharpnessConfig& cfg);
std::vector<Tensor> sharpness_loss_grad(const std::vector<Tensor>& pred, const std::vector<Tensor>& target,
                                        const SharpnessConfig& cfg);

/// Probabilities are clamped to [kProbEpsilon, 1-kProbEpsilon] before logs;
/// gradients vanish in the clamped region.
inline constexpr double kProbEpsilon = 1e-7;

/// (1/n) sum_i [ -log d_real_i - log(1 - d_fake_i) ].
double disc_loss(const std::vector<double>& d_real, const std::vector<double>& d_fake);
void disc_loss_grad(const std::vector<double>& d_real, const std::vector<double>& d_fake,
                    std::vector<double>& grad_real, std::vector<double>& grad_fake);

/// Non-saturating generator objective (1/n) sum_i -log d_fake_i.
double adv_loss(const std::vector<double>& d_fake);
std::vector<double> adv_loss_grad(const std::vector<double>& d_fake);

/// Mean over the batch of (mean|dec_left-left| + mean|dec_right-right|).
double view_consistency_loss(const std::vector<Tensor>& dec_left, const std::vector<Tensor>& dec_right,
                             const std::vector<Tensor>& left, const std::vector<Tensor>& right);
void view_consistency_loss_grad(const std::vector<Tensor>& dec_left, const std::vector<Tensor>& dec_right,
                                const std::vector<Tensor>& left, const std::vector<Tensor>& right,
                                std::vector<Tensor>& grad_left, std::vector<Tensor>& grad_right);

/// Composite generator loss; ablated components are forced to exactly 0
/// before weighting. Throws on non-finite components.
LossReport generator_total(double l_p, double l_vc, double l_adv, double l_sharp, double l_disc,
                           const LossWeights& weights, const AblationFlags& ablation);

}  // namespace scgn
