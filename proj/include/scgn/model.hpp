#pragma once

#include <optional>
#include <utility>

#include "scgn/ablation.hpp"
#include "scgn/graph.hpp"
#include "scgn/layer_calculus.hpp"

namespace scgn {

enum class Partition { theta_G, theta_V, theta_D };

const char* to_string(Partition p);

/// Named, partitioned trainable parameters. Entry names are hierarchical
/// (`vsn/enc/ec1/weight`); the partition is determined by the first path
/// segment: vsn -> theta_G, vdn -> theta_V, disc -> theta_D.
struct ParameterSet {
    ParamMap entries;

    static Partition partition_of(const std::string& name);
    std::int64_t total_count() const;
    std::int64_t count(Partition p) const;
};

/// The three networks plus their parameters. VSN and VDN are stored as
/// encoder/decoder stages: the VSN encoder runs once per side view with the
/// same parameters; the VDN decoder runs once per decomposed view with
/// per-view parameters (or once, two-headed, under shared_vdn_decoder).
struct ModelBundle {
    NetworkSpec vsn_encoder;
    NetworkSpec vsn_decoder;
    NetworkSpec vdn_encoder;   // empty when !use_vdn
    NetworkSpec vdn_decoder;   // per-view stage, or two-headed shared stage
    NetworkSpec disc;          // empty when !use_adv
    ParameterSet params;
    int resolution = 224;
    double width_scale = 1.0;
    AblationFlags ablation;

    /// Every parameter entry in deterministic (stage, declaration) order.
    std::vector<std::pair<std::string, std::vector<int>>> param_entries() const;
};

/// Scales a canonical channel count; never below one.
int scaled_channels(int channels, double width_scale);

/// Builds the published architecture at the given resolution (divisible by
/// 16), with parameters drawn from truncated-normal(0, 0.02) and zero biases.
/// `width_scale` multiplies every channel count (1.0 = published widths).
ModelBundle build_canonical(int resolution, const AblationFlags& ablation, std::uint64_t seed,
                            double width_scale = 1.0);

/// A <=500-parameter bundle at 16x16 exercising every layer kind; used by the
/// finite-difference gradient check.
ModelBundle build_tiny(std::uint64_t seed);

struct SynthTrace {
    StageTrace enc_l, enc_r, dec;
};

struct DecompTrace {
    StageTrace enc;
    StageTrace dec_l, dec_r;  // dec_l doubles as the shared two-headed trace under mVDN
};

/// I^s = G^D(G^E(I^l, I^r)). Inputs must be (-1,1)-normalized images at the
/// bundle resolution. Pass a trace to retain activations for backprop.
Tensor synthesize(const ModelBundle& bundle, const Tensor& left, const Tensor& right, SynthTrace* trace = nullptr);

/// (Î^l, Î^r) from a middle view via the decomposition network.
std::pair<Tensor, Tensor> decompose(const ModelBundle& bundle, const Tensor& middle, DecompTrace* trace = nullptr);

/// D(I): probability that `middle` is a real middle view.
double discriminate(const ModelBundle& bundle, const Tensor& middle, StageTrace* trace = nullptr);
std::vector<double> discriminate_batch(const ModelBundle& bundle, const std::vector<Tensor>& images);

/// Expected "Output Size" rows for the published tables at a given resolution
/// (published channel widths; canonical table comparison is meaningful at 224).
std::vector<std::pair<std::string, ShapeTriple>> vsn_table_rows(int resolution);
std::vector<std::pair<std::string, ShapeTriple>> vdn_table_rows(int resolution);
std::vector<std::pair<std::string, ShapeTriple>> disc_table_rows(int resolution);

void check_normalized_image(const Tensor& img, int resolution, const char* what);

}  // namespace scgn
