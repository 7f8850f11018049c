#pragma once

#include <limits>
#include <string>
#include <vector>

#include "scgn/data.hpp"
#include "scgn/losses.hpp"
#include "scgn/model.hpp"

namespace scgn {

/// Marker for the PSNR of identical images (zero MSE).
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

/// 10*log10(peak^2 / MSE) in dB; kPsnrInfinite when MSE is exactly zero.
double psnr(const Tensor& pred, const Tensor& ref, double peak);

/// Multi-scale structural similarity on one image pair (expected on the
/// 0..255 scale). Gaussian window 11/sigma 1.5, valid windowing, canonical
/// scale weights; the scale count drops (weights renormalized) until the
/// coarsest scale is at least 11 px. RGB channels are averaged.
double ms_ssim(const Tensor& pred, const Tensor& ref);

/// Mean over images of the per-image mean squared error (0..255 scale).
double mmse(const std::vector<Tensor>& pred, const std::vector<Tensor>& ref);

/// Mean over images of the per-image mean absolute error (normalized scale).
/// Identical reduction to pixel_loss; the two agree exactly.
double l1_error(const std::vector<Tensor>& pred, const std::vector<Tensor>& ref);

struct PerImageMetrics {
    std::string id;
    double psnr = 0.0;  // kPsnrInfinite on identical images
    double ms_ssim = 0.0;
    double mmse = 0.0;
    double l1 = 0.0;
    double q_s_pred = 0.0;
    double q_s_ref = 0.0;
};

struct MetricReport {
    std::vector<PerImageMetrics> per_image;
    double mean_psnr = 0.0;     // finite entries only
    int psnr_excluded = 0;      // identical-image entries left out of the mean
    double mean_ms_ssim = 0.0;
    double mean_mmse = 0.0;
    double mean_l1 = 0.0;
    double mean_q_s_pred = 0.0;
    double mean_q_s_ref = 0.0;
    std::string ablation_tag;   // e.g. "no-vdn" when evaluating an ablated model

    std::string to_json() const;
    static MetricReport from_json(const std::string& text);
    std::string to_csv() const;
};

/// Synthesizes every triplet's middle view and scores it against ground
/// truth. PSNR/MS-SSIM/mMSE run on the 0..255 scale (mMSE per this toolkit's
/// definition), L1 on the normalized scale, Q_S per the sharpness criterion.
MetricReport evaluate_dataset(const ModelBundle& bundle, const std::vector<ViewTriplet>& dataset,
                              const SharpnessConfig& sharpness);

}  // namespace scgn
