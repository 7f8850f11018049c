#include "scgn/model.hpp"

#include <cmath>

namespace scgn {

const char* to_string(Partition p) {
    switch (p) {
        case Partition::theta_G: return "theta_G";
        case Partition::theta_V: return "theta_V";
        case Partition::theta_D: return "theta_D";
    }
    return "?";
}

Partition ParameterSet::partition_of(const std::string& name) {
    if (name.rfind("vsn/", 0) == 0) return Partition::theta_G;
    if (name.rfind("vdn/", 0) == 0) return Partition::theta_V;
    if (name.rfind("disc/", 0) == 0) return Partition::theta_D;
    throw std::invalid_argument("parameter '" + name + "' belongs to no partition");
}

std::int64_t ParameterSet::total_count() const {
    std::int64_t n = 0;
    for (const auto& [k, t] : entries) n += t.numel();
    return n;
}

std::int64_t ParameterSet::count(Partition p) const {
    std::int64_t n = 0;
    for (const auto& [k, t] : entries)
        if (partition_of(k) == p) n += t.numel();
    return n;
}

int scaled_channels(int channels, double width_scale) {
    return std::max(1, static_cast<int>(std::llround(channels * width_scale)));
}

namespace {

LayerSpec conv(const std::string& name, const std::string& in, int k, int s, int oc, Activation act) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::conv;
    l.kernel = k;
    l.stride = s;
    l.out_channels = oc;
    l.activation = act;
    l.inputs = {in};
    return l;
}

LayerSpec dconv(const std::string& name, const std::string& in, int k, int rate, int oc, Activation act) {
    LayerSpec l = conv(name, in, k, 1, oc, act);
    l.kind = LayerKind::dilated_conv;
    l.dilation = rate;
    return l;
}

LayerSpec deconv(const std::string& name, const std::string& in, int k, int s, int oc, Activation act) {
    LayerSpec l = conv(name, in, k, s, oc, act);
    l.kind = LayerKind::deconv;
    return l;
}

LayerSpec maxpool(const std::string& name, const std::string& in, int k, int s) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::maxpool;
    l.kernel = k;
    l.stride = s;
    l.inputs = {in};
    return l;
}

LayerSpec upsample(const std::string& name, const std::string& in, int scale) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::upsample;
    l.stride = scale;
    l.inputs = {in};
    return l;
}

LayerSpec residual(const std::string& name, const std::string& in) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::residual_block;
    l.inputs = {in};
    return l;
}

LayerSpec projection(const std::string& name, const std::string& in, Activation act) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::projection_1x1;
    l.activation = act;
    l.inputs = {in};
    return l;
}

LayerSpec concat(const std::string& name, std::vector<std::string> ins) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::concat;
    l.inputs = std::move(ins);
    return l;
}

LayerSpec fc(const std::string& name, const std::string& in, int out, Activation act) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::fully_connected;
    l.out_channels = out;
    l.activation = act;
    l.inputs = {in};
    return l;
}

NetworkSpec build_vsn_encoder(int res, double ws, bool mvsn) {
    NetworkSpec n;
    n.name = "vsn_encoder";
    n.inputs = {{"view", {res, res, 3}}};
    const auto lk = Activation::leaky_relu;
    n.layers.push_back(conv("ec1", "view", 7, 1, scaled_channels(32, ws), lk));
    std::string prev = "ec1";
    if (!mvsn) {
        n.layers.push_back(maxpool("ep1", prev, 3, 2));
        n.layers.push_back(residual("erb1", "ep1"));
        prev = "erb1";
    }
    n.layers.push_back(conv("ec2", prev, 5, 1, scaled_channels(64, ws), lk));
    prev = "ec2";
    if (!mvsn) {
        n.layers.push_back(maxpool("ep2", prev, 3, 2));
        n.layers.push_back(residual("erb2", "ep2"));
        prev = "erb2";
    }
    n.layers.push_back(conv("ec3", prev, 3, 1, scaled_channels(128, ws), lk));
    n.layers.push_back(dconv("ec4", "ec3", 3, 2, scaled_channels(128, ws), lk));
    n.layers.push_back(dconv("ec5", "ec4", 3, 2, scaled_channels(128, ws), lk));
    n.layers.push_back(dconv("ec6", "ec5", 3, 2, scaled_channels(128, ws), lk));
    n.layers.push_back(residual("erb3", "ec6"));
    n.layers.push_back(residual("erb4", "erb3"));
    n.layers.push_back(residual("erb5", "erb4"));
    n.layers.push_back(residual("erb6", "erb5"));
    n.layers.push_back(projection("ecfeat1", "ec1", lk));
    n.layers.push_back(projection("ecfeat2", "ec2", lk));
    n.layers.push_back(projection("ecfeat3", "ec3", lk));
    n.outputs = {{"feat", "erb6"}, {"skip1", "ecfeat1"}, {"skip2", "ecfeat2"}, {"skip3", "ecfeat3"}};
    n.validate();
    return n;
}

NetworkSpec build_vsn_decoder(int res, double ws, bool mvsn) {
    NetworkSpec n;
    n.name = "vsn_decoder";
    const int bottleneck = mvsn ? res : res / 4;
    const int mid = mvsn ? res : res / 2;
    const int c128 = scaled_channels(128, ws), c64 = scaled_channels(64, ws), c32 = scaled_channels(32, ws);
    n.inputs = {{"ec6_l", {bottleneck, bottleneck, c128}},   {"ec6_r", {bottleneck, bottleneck, c128}},
                {"ecfeat1_l", {res, res, c32}},              {"ecfeat1_r", {res, res, c32}},
                {"ecfeat2_l", {mid, mid, c64}},              {"ecfeat2_r", {mid, mid, c64}},
                {"ecfeat3_l", {bottleneck, bottleneck, c128}}, {"ecfeat3_r", {bottleneck, bottleneck, c128}}};
    const auto re = Activation::relu;
    n.layers.push_back(concat("cat0", {"ec6_l", "ec6_r"}));
    n.layers.push_back(conv("dc1", "cat0", 3, 1, c128, re));
    std::string prev = "dc1";
    if (!mvsn) {
        n.layers.push_back(upsample("up1", "dc1", 1));
        prev = "up1";
    }
    n.layers.push_back(concat("cat1", {prev, "ecfeat3_l", "ecfeat3_r"}));
    n.layers.push_back(conv("dc2", "cat1", 3, 1, c64, re));
    prev = "dc2";
    if (!mvsn) {
        n.layers.push_back(upsample("up2", "dc2", 2));
        prev = "up2";
    }
    n.layers.push_back(concat("cat2", {prev, "ecfeat2_l", "ecfeat2_r"}));
    n.layers.push_back(conv("dc3", "cat2", 5, 1, c32, re));
    prev = "dc3";
    if (!mvsn) {
        n.layers.push_back(upsample("up3", "dc3", 2));
        prev = "up3";
    }
    n.layers.push_back(concat("cat3", {prev, "ecfeat1_l", "ecfeat1_r"}));
    n.layers.push_back(conv("dc4", "cat3", 7, 1, c32, re));
    n.layers.push_back(conv("dc5", "dc4", 3, 1, 3, Activation::tanh));
    n.outputs = {{"image", "dc5"}};
    n.validate();
    return n;
}

NetworkSpec build_vdn_encoder(int res, double ws, bool shared_decoder) {
    NetworkSpec n;
    n.name = "vdn_encoder";
    n.inputs = {{"middle", {res, res, 3}}};
    const auto lk = Activation::leaky_relu;
    n.layers.push_back(conv("dec1", "middle", 7, 2, scaled_channels(16, ws), lk));
    n.layers.push_back(conv("dec2", "dec1", 5, 2, scaled_channels(32, ws), lk));
    n.layers.push_back(conv("dec3", "dec2", 3, 2, scaled_channels(64, ws), lk));
    n.layers.push_back(conv("dec4", "dec3", 3, 2, scaled_channels(128, ws), lk));
    n.layers.push_back(conv("dec5", "dec4", 3, 1, scaled_channels(256, ws), lk));
    if (shared_decoder) {
        n.layers.push_back(projection("dec5_s", "dec5", lk));
        n.outputs = {{"proj", "dec5_s"}};
    } else {
        n.layers.push_back(projection("dec5_l", "dec5", lk));
        n.layers.push_back(projection("dec5_r", "dec5", lk));
        n.outputs = {{"proj_l", "dec5_l"}, {"proj_r", "dec5_r"}};
    }
    n.validate();
    return n;
}

NetworkSpec build_vdn_decoder(int res, double ws, bool shared_decoder) {
    NetworkSpec n;
    n.name = shared_decoder ? "vdn_decoder_shared" : "vdn_decoder";
    const int base = res / 16;
    n.inputs = {{"feat", {base, base, scaled_channels(256, ws)}}};
    const auto re = Activation::relu;
    n.layers.push_back(deconv("ddc1", "feat", 3, 2, scaled_channels(128, ws), re));
    n.layers.push_back(deconv("ddc2", "ddc1", 3, 2, scaled_channels(64, ws), re));
    n.layers.push_back(deconv("ddc3", "ddc2", 5, 2, scaled_channels(32, ws), re));
    n.layers.push_back(deconv("ddc4", "ddc3", 7, 2, scaled_channels(16, ws), re));
    if (shared_decoder) {
        n.layers.push_back(deconv("ddc5_l", "ddc4", 3, 1, 3, Activation::tanh));
        n.layers.push_back(deconv("ddc5_r", "ddc4", 3, 1, 3, Activation::tanh));
        n.outputs = {{"left", "ddc5_l"}, {"right", "ddc5_r"}};
    } else {
        n.layers.push_back(deconv("ddc5", "ddc4", 3, 1, 3, Activation::tanh));
        n.outputs = {{"image", "ddc5"}};
    }
    n.validate();
    return n;
}

NetworkSpec build_disc(int res, double ws) {
    NetworkSpec n;
    n.name = "discriminator";
    n.inputs = {{"image", {res, res, 3}}};
    const auto lk = Activation::leaky_relu;
    n.layers.push_back(conv("disc1", "image", 5, 2, scaled_channels(32, ws), lk));
    n.layers.push_back(conv("disc2", "disc1", 5, 2, scaled_channels(64, ws), lk));
    n.layers.push_back(conv("disc3", "disc2", 5, 2, scaled_channels(128, ws), lk));
    n.layers.push_back(conv("disc4", "disc3", 5, 2, scaled_channels(256, ws), lk));
    n.layers.push_back(fc("fc5", "disc4", 1, Activation::sigmoid));
    n.outputs = {{"prob", "fc5"}};
    n.validate();
    return n;
}

void init_params(ModelBundle& bundle, std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& [name, shape] : bundle.param_entries()) {
        Tensor t(shape);
        const bool is_bias = name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0;
        if (!is_bias)
            for (double& x : t.v) x = rng.truncated_normal(0.02);
        bundle.params.entries.emplace(name, std::move(t));
    }
}

}  // namespace

std::vector<std::pair<std::string, std::vector<int>>> ModelBundle::param_entries() const {
    std::vector<std::pair<std::string, std::vector<int>>> all;
    auto append = [&all](std::vector<std::pair<std::string, std::vector<int>>> v) {
        all.insert(all.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    };
    append(stage_param_entries(vsn_encoder, "vsn/enc"));
    append(stage_param_entries(vsn_decoder, "vsn/dec"));
    if (ablation.use_vdn) {
        append(stage_param_entries(vdn_encoder, "vdn/enc"));
        if (ablation.shared_vdn_decoder) {
            append(stage_param_entries(vdn_decoder, "vdn/dec_s"));
        } else {
            append(stage_param_entries(vdn_decoder, "vdn/dec_l"));
            append(stage_param_entries(vdn_decoder, "vdn/dec_r"));
        }
    }
    if (ablation.use_adv) append(stage_param_entries(disc, "disc"));
    return all;
}

ModelBundle build_canonical(int resolution, const AblationFlags& ablation, std::uint64_t seed,
                            double width_scale) {
    if (resolution < 16 || resolution % 16 != 0)
        throw std::invalid_argument("resolution must be a positive multiple of 16, got " +
                                    std::to_string(resolution));
    ModelBundle b;
    b.resolution = resolution;
    b.width_scale = width_scale;
    b.ablation = ablation;
    b.vsn_encoder = build_vsn_encoder(resolution, width_scale, ablation.mvsn);
    b.vsn_decoder = build_vsn_decoder(resolution, width_scale, ablation.mvsn);
    if (ablation.use_vdn) {
        b.vdn_encoder = build_vdn_encoder(resolution, width_scale, ablation.shared_vdn_decoder);
        b.vdn_decoder = build_vdn_decoder(resolution, width_scale, ablation.shared_vdn_decoder);
    }
    if (ablation.use_adv) b.disc = build_disc(resolution, width_scale);
    init_params(b, seed);
    return b;
}

ModelBundle build_tiny(std::uint64_t seed) {
    const int res = 16;
    ModelBundle b;
    b.resolution = res;
    b.width_scale = 0.0;  // not a scaled canonical; marker value
    b.ablation = AblationFlags{};

    {
        NetworkSpec n;
        n.name = "vsn_encoder";
        n.inputs = {{"view", {res, res, 3}}};
        const auto lk = Activation::leaky_relu;
        n.layers.push_back(conv("ec1", "view", 3, 1, 1, lk));
        n.layers.push_back(maxpool("ep1", "ec1", 3, 2));
        n.layers.push_back(conv("ec2", "ep1", 3, 1, 1, lk));
        n.layers.push_back(maxpool("ep2", "ec2", 3, 2));
        n.layers.push_back(residual("erb1", "ep2"));
        n.layers.push_back(conv("ec3", "erb1", 3, 1, 1, lk));
        n.layers.push_back(dconv("ec4", "ec3", 3, 2, 1, lk));
        n.layers.push_back(projection("ecfeat1", "ec1", lk));
        n.layers.push_back(projection("ecfeat2", "ec2", lk));
        n.layers.push_back(projection("ecfeat3", "ec3", lk));
        n.outputs = {{"feat", "ec4"}, {"skip1", "ecfeat1"}, {"skip2", "ecfeat2"}, {"skip3", "ecfeat3"}};
        n.validate();
        b.vsn_encoder = std::move(n);
    }
    {
        NetworkSpec n;
        n.name = "vsn_decoder";
        n.inputs = {{"ec6_l", {4, 4, 1}},     {"ec6_r", {4, 4, 1}},     {"ecfeat1_l", {16, 16, 1}},
                    {"ecfeat1_r", {16, 16, 1}}, {"ecfeat2_l", {8, 8, 1}}, {"ecfeat2_r", {8, 8, 1}},
                    {"ecfeat3_l", {4, 4, 1}},  {"ecfeat3_r", {4, 4, 1}}};
        const auto re = Activation::relu;
        n.layers.push_back(concat("cat0", {"ec6_l", "ec6_r"}));
        n.layers.push_back(conv("dc1", "cat0", 3, 1, 1, re));
        n.layers.push_back(upsample("up1", "dc1", 1));
        n.layers.push_back(concat("cat1", {"up1", "ecfeat3_l", "ecfeat3_r"}));
        n.layers.push_back(conv("dc2", "cat1", 3, 1, 1, re));
        n.layers.push_back(upsample("up2", "dc2", 2));
        n.layers.push_back(concat("cat2", {"up2", "ecfeat2_l", "ecfeat2_r"}));
        n.layers.push_back(conv("dc3", "cat2", 3, 1, 1, re));
        n.layers.push_back(upsample("up3", "dc3", 2));
        n.layers.push_back(concat("cat3", {"up3", "ecfeat1_l", "ecfeat1_r"}));
        n.layers.push_back(conv("dc4", "cat3", 3, 1, 1, re));
        n.layers.push_back(conv("dc5", "dc4", 3, 1, 3, Activation::tanh));
        n.outputs = {{"image", "dc5"}};
        n.validate();
        b.vsn_decoder = std::move(n);
    }
    {
        NetworkSpec n;
        n.name = "vdn_encoder";
        n.inputs = {{"middle", {res, res, 3}}};
        const auto lk = Activation::leaky_relu;
        n.layers.push_back(conv("dec1", "middle", 3, 2, 1, lk));
        n.layers.push_back(conv("dec2", "dec1", 3, 2, 1, lk));
        n.layers.push_back(conv("dec3", "dec2", 3, 2, 1, lk));
        n.layers.push_back(conv("dec4", "dec3", 3, 2, 1, lk));
        n.layers.push_back(conv("dec5", "dec4", 3, 1, 1, lk));
        n.layers.push_back(projection("dec5_l", "dec5", lk));
        n.layers.push_back(projection("dec5_r", "dec5", lk));
        n.outputs = {{"proj_l", "dec5_l"}, {"proj_r", "dec5_r"}};
        n.validate();
        b.vdn_encoder = std::move(n);
    }
    {
        NetworkSpec n;
        n.name = "vdn_decoder";
        n.inputs = {{"feat", {1, 1, 1}}};
        const auto re = Activation::relu;
        n.layers.push_back(deconv("ddc1", "feat", 3, 2, 1, re));
        n.layers.push_back(deconv("ddc2", "ddc1", 3, 2, 1, re));
        n.layers.push_back(deconv("ddc3", "ddc2", 3, 2, 1, re));
        n.layers.push_back(deconv("ddc4", "ddc3", 3, 2, 1, re));
        n.layers.push_back(deconv("ddc5", "ddc4", 3, 1, 3, Activation::tanh));
        n.outputs = {{"image", "ddc5"}};
        n.validate();
        b.vdn_decoder = std::move(n);
    }
    {
        NetworkSpec n;
        n.name = "discriminator";
        n.inputs = {{"image", {res, res, 3}}};
        const auto lk = Activation::leaky_relu;
        n.layers.push_back(conv("disc1", "image", 3, 2, 1, lk));
        n.layers.push_back(conv("disc2", "disc1", 3, 2, 1, lk));
        n.layers.push_back(conv("disc3", "disc2", 3, 2, 1, lk));
        n.layers.push_back(conv("disc4", "disc3", 3, 2, 1, lk));
        n.layers.push_back(fc("fc5", "disc4", 1, Activation::sigmoid));
        n.outputs = {{"prob", "fc5"}};
        n.validate();
        b.disc = std::move(n);
    }
    init_params(b, seed);
    return b;
}

void check_normalized_image(const Tensor& img, int resolution, const char* what) {
    if (img.shape != std::vector<int>{resolution, resolution, 3})
        throw std::invalid_argument(std::string(what) + ": expected shape " +
                                    std::to_string(resolution) + "x" + std::to_string(resolution) +
                                    "x3, got " + shape_str(img.shape));
    for (double x : img.v)
        if (!(x >= -1.0 && x <= 1.0))
            throw std::invalid_argument(std::string(what) + ": values must lie in [-1,1] (got " +
                                        std::to_string(x) + "); normalize inputs first");
}

namespace {
const std::string& out_of(const NetworkSpec& s, const std::string& name) {
    for (const auto& [o, l] : s.outputs)
        if (o == name) return l;
    throw std::logic_error("stage '" + s.name + "' declares no output '" + name + "'");
}
}  // namespace

Tensor synthesize(const ModelBundle& bundle, const Tensor& left, const Tensor& right, SynthTrace* trace) {
    check_normalized_image(left, bundle.resolution, "synthesize left view");
    check_normalized_image(right, bundle.resolution, "synthesize right view");
    SynthTrace local;
    SynthTrace& tr = trace ? *trace : local;
    tr.enc_l = stage_forward(bundle.vsn_encoder, bundle.params.entries, "vsn/enc", {{"view", left}});
    tr.enc_r = stage_forward(bundle.vsn_encoder, bundle.params.entries, "vsn/enc", {{"view", right}});
    const NetworkSpec& enc = bundle.vsn_encoder;
    std::map<std::string, Tensor> dec_in;
    dec_in.emplace("ec6_l", tr.enc_l.out(out_of(enc, "feat")));
    dec_in.emplace("ec6_r", tr.enc_r.out(out_of(enc, "feat")));
    for (int k = 1; k <= 3; ++k) {
        const std::string skip = "skip" + std::to_string(k);
        dec_in.emplace("ecfeat" + std::to_string(k) + "_l", tr.enc_l.out(out_of(enc, skip)));
        dec_in.emplace("ecfeat" + std::to_string(k) + "_r", tr.enc_r.out(out_of(enc, skip)));
    }
    tr.dec = stage_forward(bundle.vsn_decoder, bundle.params.entries, "vsn/dec", dec_in);
    return tr.dec.out(out_of(bundle.vsn_decoder, "image"));
}

std::pair<Tensor, Tensor> decompose(const ModelBundle& bundle, const Tensor& middle, DecompTrace* trace) {
    if (!bundle.ablation.use_vdn)
        throw std::invalid_argument("decompose: the decomposition network is disabled in this bundle");
    check_normalized_image(middle, bundle.resolution, "decompose middle view");
    DecompTrace local;
    DecompTrace& tr = trace ? *trace : local;
    tr.enc = stage_forward(bundle.vdn_encoder, bundle.params.entries, "vdn/enc", {{"middle", middle}});
    if (bundle.ablation.shared_vdn_decoder) {
        tr.dec_l = stage_forward(bundle.vdn_decoder, bundle.params.entries, "vdn/dec_s",
                                 {{"feat", tr.enc.out(out_of(bundle.vdn_encoder, "proj"))}});
        return {tr.dec_l.out(out_of(bundle.vdn_decoder, "left")), tr.dec_l.out(out_of(bundle.vdn_decoder, "right"))};
    }
    tr.dec_l = stage_forward(bundle.vdn_decoder, bundle.params.entries, "vdn/dec_l",
                             {{"feat", tr.enc.out(out_of(bundle.vdn_encoder, "proj_l"))}});
    tr.dec_r = stage_forward(bundle.vdn_decoder, bundle.params.entries, "vdn/dec_r",
                             {{"feat", tr.enc.out(out_of(bundle.vdn_encoder, "proj_r"))}});
    return {tr.dec_l.out(out_of(bundle.vdn_decoder, "image")), tr.dec_r.out(out_of(bundle.vdn_decoder, "image"))};
}

double discriminate(const ModelBundle& bundle, const Tensor& middle, StageTrace* trace) {
    if (!bundle.ablation.use_adv)
        throw std::invalid_argument("discriminate: the discriminator is disabled in this bundle");
    check_normalized_image(middle, bundle.resolution, "discriminate input");
    StageTrace local;
    StageTrace& tr = trace ? *trace : local;
    tr = stage_forward(bundle.disc, bundle.params.entries, "disc", {{"image", middle}});
    return tr.out(out_of(bundle.disc, "prob")).v[0];
}

std::vector<double> discriminate_batch(const ModelBundle& bundle, const std::vector<Tensor>& images) {
    std::vector<double> probs;
    probs.reserve(images.size());
    for (const auto& img : images) probs.push_back(discriminate(bundle, img));
    return probs;
}

namespace {
ShapeTriple st(int h, int w, int c) { return {h, w, c}; }
}  // namespace

std::vector<std::pair<std::string, ShapeTriple>> vsn_table_rows(int res) {
    const int h2 = res / 2, h4 = res / 4;
    return {
        {"ec1", st(res, res, 32)}, {"ep1", st(h2, h2, 32)},  {"ec2", st(h2, h2, 64)},
        {"ep2", st(h4, h4, 64)},   {"ec3", st(h4, h4, 128)}, {"ec4", st(h4, h4, 128)},
        {"ec5", st(h4, h4, 128)},  {"ec6", st(h4, h4, 128)}, {"dc1", st(h4, h4, 128)},
        {"up1", st(h4, h4, 128)},  {"dc2", st(h4, h4, 64)},  {"up2", st(h2, h2, 64)},
        {"dc3", st(h2, h2, 32)},   {"up3", st(res, res, 32)}, {"dc4", st(res, res, 32)},
        {"dc5", st(res, res, 3)},
    };
}

std::vector<std::pair<std::string, ShapeTriple>> vdn_table_rows(int res) {
    const int h2 = res / 2, h4 = res / 4, h8 = res / 8, h16 = res / 16;
    return {
        {"dec1", st(h2, h2, 16)},  {"dec2", st(h4, h4, 32)},  {"dec3", st(h8, h8, 64)},
        {"dec4", st(h16, h16, 128)}, {"dec5", st(h16, h16, 256)}, {"ddc1", st(h8, h8, 128)},
        {"ddc2", st(h4, h4, 64)},  {"ddc3", st(h2, h2, 32)},  {"ddc4", st(res, res, 16)},
        {"ddc5", st(res, res, 3)},
    };
}

std::vector<std::pair<std::string, ShapeTriple>> disc_table_rows(int res) {
    const int h2 = res / 2, h4 = res / 4, h8 = res / 8, h16 = res / 16;
    return {
        {"disc1", st(h2, h2, 32)},  {"disc2", st(h4, h4, 64)}, {"disc3", st(h8, h8, 128)},
        {"disc4", st(h16, h16, 256)}, {"fc5", st(1, 1, 1)},
    };
}

}  // namespace scgn
