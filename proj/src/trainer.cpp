#include "scgn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

namespace scgn {

using nlohmann::json;

void OptimizerConfig::validate() const {
    if (!(lr_generator > 0.0) || !(lr_discriminator > 0.0))
        throw std::invalid_argument("learning rates must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw std::invalid_argument("adam betas must lie in (0,1)");
    if (decay_at_iteration < 1) throw std::invalid_argument("decay_at_iteration must be >= 1");
    if (!(decay_factor > 0.0)) throw std::invalid_argument("decay_factor must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
}

void TrainConfig::validate() const {
    if (total_iterations < 1) throw std::invalid_argument("total_iterations must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    weights.validate();
    optimizer.validate();
    sharpness.validate();
}

std::string TrainConfig::to_json() const {
    json j;
    j["total_iterations"] = total_iterations;
    j["batch_size"] = batch_size;
    j["lambda1"] = weights.lambda1;
    j["lambda2"] = weights.lambda2;
    j["lambda3"] = weights.lambda3;
    j["beta1"] = optimizer.beta1;
    j["beta2"] = optimizer.beta2;
    j["lr_generator"] = optimizer.lr_generator;
    j["lr_discriminator"] = optimizer.lr_discriminator;
    j["decay_factor"] = optimizer.decay_factor;
    j["decay_at_iteration"] = optimizer.decay_at_iteration;
    j["adam_epsilon"] = optimizer.epsilon;
    j["use_vdn"] = ablation.use_vdn;
    j["shared_vdn_decoder"] = ablation.shared_vdn_decoder;
    j["use_adv"] = ablation.use_adv;
    j["use_sharp"] = ablation.use_sharp;
    j["mvsn"] = ablation.mvsn;
    j["sharpness_block"] = sharpness.block_size;
    j["sharpness_gaussian_kernel"] = sharpness.gaussian_kernel;
    j["sharpness_gaussian_sigma"] = sharpness.gaussian_sigma;
    j["checkpoint_interval"] = checkpoint_interval;
    j["seed"] = seed;
    j["vdn_input_ground_truth"] = vdn_input_ground_truth;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed train config json: ") + e.what());
    }
    TrainConfig c;
    c.total_iterations = j.value("total_iterations", c.total_iterations);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.weights.lambda1 = j.value("lambda1", c.weights.lambda1);
    c.weights.lambda2 = j.value("lambda2", c.weights.lambda2);
    c.weights.lambda3 = j.value("lambda3", c.weights.lambda3);
    c.optimizer.beta1 = j.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = j.value("beta2", c.optimizer.beta2);
    c.optimizer.lr_generator = j.value("lr_generator", c.optimizer.lr_generator);
    c.optimizer.lr_discriminator = j.value("lr_discriminator", c.optimizer.lr_discriminator);
    c.optimizer.decay_factor = j.value("decay_factor", c.optimizer.decay_factor);
    c.optimizer.decay_at_iteration = j.value("decay_at_iteration", c.optimizer.decay_at_iteration);
    c.optimizer.epsilon = j.value("adam_epsilon", c.optimizer.epsilon);
    c.ablation.use_vdn = j.value("use_vdn", c.ablation.use_vdn);
    c.ablation.shared_vdn_decoder = j.value("shared_vdn_decoder", c.ablation.shared_vdn_decoder);
    c.ablation.use_adv = j.value("use_adv", c.ablation.use_adv);
    c.ablation.use_sharp = j.value("use_sharp", c.ablation.use_sharp);
    c.ablation.mvsn = j.value("mvsn", c.ablation.mvsn);
    c.sharpness.block_size = j.value("sharpness_block", c.sharpness.block_size);
    c.sharpness.gaussian_kernel = j.value("sharpness_gaussian_kernel", c.sharpness.gaussian_kernel);
    c.sharpness.gaussian_sigma = j.value("sharpness_gaussian_sigma", c.sharpness.gaussian_sigma);
    c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
    c.seed = j.value("seed", c.seed);
    c.vdn_input_ground_truth = j.value("vdn_input_ground_truth", c.vdn_input_ground_truth);
    return c;
}

TrainState make_train_state(const ModelBundle& bundle, std::uint64_t seed) {
    TrainState s;
    s.rng = Rng(seed);
    for (const auto& [name, t] : bundle.params.entries) {
        s.moment1.emplace(name, Tensor(t.shape));
        s.moment2.emplace(name, Tensor(t.shape));
    }
    s.adam_steps = {{"theta_G", 0}, {"theta_V", 0}, {"theta_D", 0}};
    return s;
}

namespace {

// Keeps decayed rates on the decimal grid of the config values
// (fl64(1e-5)*fl64(0.1) is not fl64(1e-6)).
double decimal_product(double a, double b) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", a * b);
    return std::strtod(buf, nullptr);
}

}  // namespace

double learning_rate(std::int64_t t, const OptimizerConfig& cfg, WhichRate which) {
    if (t < 1) throw std::invalid_argument("learning_rate: iteration must be >= 1");
    const double base = which == WhichRate::generator ? cfg.lr_generator : cfg.lr_discriminator;
    if (t < cfg.decay_at_iteration) return base;
    return decimal_product(base, cfg.decay_factor);
}

void adam_step(ModelBundle& bundle, TrainState& state, const ParamMap& grads, Partition partition,
               double lr, const OptimizerConfig& cfg) {
    auto& steps = state.adam_steps.at(to_string(partition));
    ++steps;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(steps));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(steps));
    for (auto& [name, theta] : bundle.params.entries) {
        if (ParameterSet::partition_of(name) != partition) continue;
        Tensor& m = state.moment1.at(name);
        Tensor& v = state.moment2.at(name);
        auto git = grads.find(name);
        const Tensor* g = git != grads.end() ? &git->second : nullptr;
        for (std::size_t i = 0; i < theta.v.size(); ++i) {
            const double gi = g ? g->v[i] : 0.0;
            m.v[i] = cfg.beta1 * m.v[i] + (1.0 - cfg.beta1) * gi;
            v.v[i] = cfg.beta2 * v.v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = m.v[i] / bc1;
            const double vhat = v.v[i] / bc2;
            theta.v[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

namespace {

const std::string& stage_output_layer(const NetworkSpec& s, const std::string& alias) {
    for (const auto& [o, l] : s.outputs)
        if (o == alias) return l;
    throw std::logic_error("stage '" + s.name + "' declares no output '" + alias + "'");
}

void check_finite_grads(const ParamMap& grads, const char* which) {
    for (const auto& [name, g] : grads)
        for (double x : g.v)
            if (!std::isfinite(x))
                throw TrainingAbort(std::string("non-finite gradient in ") + which + " update at '" + name + "'");
}

struct AblationEqual {
    static void check(const AblationFlags& a, const AblationFlags& b) {
        if (a.use_vdn != b.use_vdn || a.shared_vdn_decoder != b.shared_vdn_decoder || a.use_adv != b.use_adv ||
            a.use_sharp != b.use_sharp || a.mvsn != b.mvsn)
            throw std::invalid_argument("train config ablation flags disagree with the model bundle");
    }
};

}  // namespace

LossReport train_step(ModelBundle& bundle, const std::vector<ViewTriplet>& batch, TrainState& state,
                      const TrainConfig& cfg, const StepObserver& observer) {
    cfg.validate();
    AblationEqual::check(cfg.ablation, bundle.ablation);
    if (static_cast<int>(batch.size()) != cfg.batch_size)
        throw std::invalid_argument("train_step: batch size " + std::to_string(batch.size()) +
                                    " != configured " + std::to_string(cfg.batch_size));
    if (state.moment1.size() != bundle.params.entries.size())
        throw std::invalid_argument("train_step: optimizer state does not match the parameter set");
    const std::size_t n = batch.size();
    const std::int64_t t = state.iteration + 1;
    const AblationFlags& ab = bundle.ablation;
    const double lr_g = learning_rate(t, cfg.optimizer, WhichRate::generator);
    const double lr_d = learning_rate(t, cfg.optimizer, WhichRate::discriminator);

    // Lines 3-4: synthesize and decompose with iteration-start parameters.
    std::vector<SynthTrace> synth(n);
    std::vector<DecompTrace> decomp(n);
    std::vector<Tensor> i_s, dec_l, dec_r, gt, left, right;
    i_s.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        i_s.push_back(synthesize(bundle, batch[i].left, batch[i].right, &synth[i]));
        gt.push_back(batch[i].middle);
        left.push_back(batch[i].left);
        right.push_back(batch[i].right);
    }
    if (ab.use_vdn) {
        for (std::size_t i = 0; i < n; ++i) {
            auto [dl, dr] = decompose(bundle, cfg.vdn_input_ground_truth ? gt[i] : i_s[i], &decomp[i]);
            dec_l.push_back(std::move(dl));
            dec_r.push_back(std::move(dr));
        }
    }

    double l_p = pixel_loss(i_s, gt);
    double l_sharp = ab.use_sharp ? sharpness_loss(i_s, gt, cfg.sharpness) : 0.0;
    double l_vc = ab.use_vdn ? view_consistency_loss(dec_l, dec_r, left, right) : 0.0;
    double l_adv = 0.0, l_disc = 0.0;

    // (c) Discriminator update: minimize L_disc, I^s constant w.r.t. theta_G.
    if (ab.use_adv) {
        std::vector<StageTrace> disc_real(n), disc_fake(n);
        std::vector<double> d_real(n), d_fake(n);
        for (std::size_t i = 0; i < n; ++i) {
            d_real[i] = discriminate(bundle, gt[i], &disc_real[i]);
            d_fake[i] = discriminate(bundle, i_s[i], &disc_fake[i]);
        }
        l_disc = disc_loss(d_real, d_fake);
        if (!std::isfinite(l_disc)) throw TrainingAbort("non-finite discriminator loss");
        std::vector<double> g_real, g_fake;
        disc_loss_grad(d_real, d_fake, g_real, g_fake);
        ParamMap grads_d;
        const std::string prob_layer = stage_output_layer(bundle.disc, "prob");
        for (std::size_t i = 0; i < n; ++i) {
            std::map<std::string, Tensor> og;
            og.emplace(prob_layer, Tensor::full({1, 1, 1}, g_real[i]));
            stage_backward(bundle.disc, bundle.params.entries, "disc", disc_real[i], std::move(og), &grads_d, false);
            std::map<std::string, Tensor> og2;
            og2.emplace(prob_layer, Tensor::full({1, 1, 1}, g_fake[i]));
            stage_backward(bundle.disc, bundle.params.entries, "disc", disc_fake[i], std::move(og2), &grads_d, false);
        }
        check_finite_grads(grads_d, "discriminator");
        adam_step(bundle, state, grads_d, Partition::theta_D, lr_d, cfg.optimizer);
        if (observer) observer(SubStep::discriminator);
    }

    // Shared VDN backward: produces both dL_vc/d(theta_V) for step (e) and
    // dL_vc/d(I^s) for the lambda1 term of step (d).
    ParamMap grads_v;
    std::vector<Tensor> vc_input_grads;
    if (ab.use_vdn) {
        std::vector<Tensor> gvl, gvr;
        view_consistency_loss_grad(dec_l, dec_r, left, right, gvl, gvr);
        const NetworkSpec& vdec = bundle.vdn_decoder;
        const NetworkSpec& venc = bundle.vdn_encoder;
        for (std::size_t i = 0; i < n; ++i) {
            std::map<std::string, Tensor> enc_og;
            if (ab.shared_vdn_decoder) {
                std::map<std::string, Tensor> og;
                og.emplace(stage_output_layer(vdec, "left"), std::move(gvl[i]));
                og.emplace(stage_output_layer(vdec, "right"), std::move(gvr[i]));
                auto ig = stage_backward(vdec, bundle.params.entries, "vdn/dec_s", decomp[i].dec_l, std::move(og),
                                         &grads_v, true);
                enc_og.emplace(stage_output_layer(venc, "proj"), std::move(ig.at("feat")));
            } else {
                std::map<std::string, Tensor> og_l, og_r;
                og_l.emplace(stage_output_layer(vdec, "image"), std::move(gvl[i]));
                og_r.emplace(stage_output_layer(vdec, "image"), std::move(gvr[i]));
                auto ig_l = stage_backward(vdec, bundle.params.entries, "vdn/dec_l", decomp[i].dec_l, std::move(og_l),
                                           &grads_v, true);
                auto ig_r = stage_backward(vdec, bundle.params.entries, "vdn/dec_r", decomp[i].dec_r, std::move(og_r),
                                           &grads_v, true);
                enc_og.emplace(stage_output_layer(venc, "proj_l"), std::move(ig_l.at("feat")));
                enc_og.emplace(stage_output_layer(venc, "proj_r"), std::move(ig_r.at("feat")));
            }
            auto ig = stage_backward(venc, bundle.params.entries, "vdn/enc", decomp[i].enc, std::move(enc_og),
                                     &grads_v, !cfg.vdn_input_ground_truth);
            if (!cfg.vdn_input_ground_truth) vc_input_grads.push_back(std::move(ig.at("middle")));
        }
        check_finite_grads(grads_v, "decomposer");
    }

    // (d) Generator update: minimize L_G = L_p + l1*L_vc + l2*L_adv + l3*L_sharp,
    // with the freshly updated discriminator and theta_V held fixed.
    std::vector<double> d_fake2(n, 0.0);
    {
        std::vector<Tensor> gs = pixel_loss_grad(i_s, gt);
        if (ab.use_sharp) {
            auto sharp_grads = sharpness_loss_grad(i_s, gt, cfg.sharpness);
            for (std::size_t i = 0; i < n; ++i) {
                sharp_grads[i].scale(cfg.weights.lambda3);
                gs[i] += sharp_grads[i];
            }
        }
        if (ab.use_vdn && !cfg.vdn_input_ground_truth) {
            for (std::size_t i = 0; i < n; ++i) {
                vc_input_grads[i].scale(cfg.weights.lambda1);
                gs[i] += vc_input_grads[i];
            }
        }
        if (ab.use_adv) {
            std::vector<StageTrace> disc_fake2(n);
            for (std::size_t i = 0; i < n; ++i) d_fake2[i] = discriminate(bundle, i_s[i], &disc_fake2[i]);
            l_adv = adv_loss(d_fake2);
            const auto ga = adv_loss_grad(d_fake2);
            const std::string prob_layer = stage_output_layer(bundle.disc, "prob");
            for (std::size_t i = 0; i < n; ++i) {
                std::map<std::string, Tensor> og;
                og.emplace(prob_layer, Tensor::full({1, 1, 1}, ga[i]));
                auto ig = stage_backward(bundle.disc, bundle.params.entries, "disc", disc_fake2[i], std::move(og),
                                         nullptr, true);
                Tensor gimg = std::move(ig.at("image"));
                gimg.scale(cfg.weights.lambda2);
                gs[i] += gimg;
            }
        }
        ParamMap grads_g;
        const NetworkSpec& enc = bundle.vsn_encoder;
        const NetworkSpec& dec = bundle.vsn_decoder;
        const std::string image_layer = stage_output_layer(dec, "image");
        for (std::size_t i = 0; i < n; ++i) {
            std::map<std::string, Tensor> og;
            og.emplace(image_layer, std::move(gs[i]));
            auto ig = stage_backward(dec, bundle.params.entries, "vsn/dec", synth[i].dec, std::move(og), &grads_g, true);
            std::map<std::string, Tensor> og_l, og_r;
            og_l.emplace(stage_output_layer(enc, "feat"), std::move(ig.at("ec6_l")));
            og_r.emplace(stage_output_layer(enc, "feat"), std::move(ig.at("ec6_r")));
            for (int k = 1; k <= 3; ++k) {
                const std::string skip_layer = stage_output_layer(enc, "skip" + std::to_string(k));
                og_l.emplace(skip_layer, std::move(ig.at("ecfeat" + std::to_string(k) + "_l")));
                og_r.emplace(skip_layer, std::move(ig.at("ecfeat" + std::to_string(k) + "_r")));
            }
            stage_backward(enc, bundle.params.entries, "vsn/enc", synth[i].enc_l, std::move(og_l), &grads_g, false);
            stage_backward(enc, bundle.params.entries, "vsn/enc", synth[i].enc_r, std::move(og_r), &grads_g, false);
        }
        check_finite_grads(grads_g, "generator");
        adam_step(bundle, state, grads_g, Partition::theta_G, lr_g, cfg.optimizer);
        if (observer) observer(SubStep::generator);
    }

    // (e) Decomposition update: minimize (unweighted) L_vc with theta_G fixed.
    if (ab.use_vdn) {
        adam_step(bundle, state, grads_v, Partition::theta_V, lr_g, cfg.optimizer);
        if (observer) observer(SubStep::decomposer);
    }

    LossReport report = generator_total(l_p, l_vc, l_adv, l_sharp, l_disc, cfg.weights, ab);
    if (!std::isfinite(report.l_g_total)) throw TrainingAbort("non-finite generator loss");
    report.per_image.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        report.per_image[i].l_p = pixel_loss({i_s[i]}, {gt[i]});
        if (ab.use_vdn) report.per_image[i].l_vc = view_consistency_loss({dec_l[i]}, {dec_r[i]}, {left[i]}, {right[i]});
        if (ab.use_sharp) report.per_image[i].l_sharp = sharpness_loss({i_s[i]}, {gt[i]}, cfg.sharpness);
        if (ab.use_adv) report.per_image[i].l_adv = adv_loss({d_fake2[i]});
    }
    state.iteration = t;
    state.history.push_back(report);
    return report;
}

FitResult fit(ModelBundle& bundle, const std::vector<ViewTriplet>& dataset, const TrainConfig& cfg,
              const std::filesystem::path& out_dir, TrainState* resume_state) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("fit: empty dataset");
    for (const auto& tp : dataset) {
        check_normalized_image(tp.left, bundle.resolution, ("triplet " + tp.id + " left").c_str());
        check_normalized_image(tp.middle, bundle.resolution, ("triplet " + tp.id + " middle").c_str());
        check_normalized_image(tp.right, bundle.resolution, ("triplet " + tp.id + " right").c_str());
    }
    std::filesystem::create_directories(out_dir);

    TrainState local_state;
    TrainState& state = resume_state ? *resume_state : local_state;
    if (!resume_state) state = make_train_state(bundle, cfg.seed);

    {
        std::ofstream manifest(out_dir / "run_manifest.json");
        manifest << cfg.to_json() << "\n";
    }
    FitResult result;
    result.loss_csv = out_dir / "loss.csv";
    std::ofstream csv(result.loss_csv);
    if (!csv) throw std::runtime_error("fit: cannot write " + result.loss_csv.string());
    csv << LossReport::csv_header() << "\n";

    const int count = static_cast<int>(dataset.size());
    for (std::int64_t t = state.iteration + 1; t <= cfg.total_iterations; ++t) {
        std::vector<ViewTriplet> batch;
        batch.reserve(cfg.batch_size);
        for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(dataset[state.rng.uniform_int(0, count - 1)]);
        const LossReport report = train_step(bundle, batch, state, cfg);
        result.history.push_back(report);
        csv << report.csv_row(t) << "\n";
        const bool at_interval = cfg.checkpoint_interval > 0 && t % cfg.checkpoint_interval == 0;
        if (at_interval || t == cfg.total_iterations) {
            const auto file = out_dir / ("ckpt_" + std::to_string(t) + ".scgn");
            save_checkpoint(file, bundle, state);
            result.checkpoints.push_back(file);
        }
    }
    csv.flush();
    if (!csv) throw std::runtime_error("fit: failed writing " + result.loss_csv.string());
    return result;
}

namespace {

// Scalar loss evaluations used by the finite-difference probe. These must see
// exactly what the analytic backward passes see.
struct LossProbe {
    const ModelBundle& bundle;
    const ViewTriplet& triplet;
    const TrainConfig& cfg;

    double loss_g() const {
        Tensor i_s = synthesize(bundle, triplet.left, triplet.right);
        double total = pixel_loss({i_s}, {triplet.middle});
        if (bundle.ablation.use_sharp)
            total += cfg.weights.lambda3 * sharpness_loss({i_s}, {triplet.middle}, cfg.sharpness);
        if (bundle.ablation.use_vdn) {
            auto [dl, dr] = decompose(bundle, cfg.vdn_input_ground_truth ? triplet.middle : i_s);
            total += cfg.weights.lambda1 *
                     view_consistency_loss({dl}, {dr}, {triplet.left}, {triplet.right});
        }
        if (bundle.ablation.use_adv) total += cfg.weights.lambda2 * adv_loss({discriminate(bundle, i_s)});
        return total;
    }

    double loss_vc() const {
        Tensor i_s = synthesize(bundle, triplet.left, triplet.right);
        auto [dl, dr] = decompose(bundle, cfg.vdn_input_ground_truth ? triplet.middle : i_s);
        return view_consistency_loss({dl}, {dr}, {triplet.left}, {triplet.right});
    }

    double loss_disc() const {
        Tensor i_s = synthesize(bundle, triplet.left, triplet.right);
        return disc_loss({discriminate(bundle, triplet.middle)}, {discriminate(bundle, i_s)});
    }

    double eval(Partition p) const {
        switch (p) {
            case Partition::theta_G: return loss_g();
            case Partition::theta_V: return loss_vc();
            case Partition::theta_D: return loss_disc();
        }
        return 0.0;
    }
};

// Analytic gradients of the three per-partition objectives at the current
// parameters, mirroring train_step's backward wiring (no updates applied).
void analytic_gradients(const ModelBundle& bundle, const ViewTriplet& triplet, const TrainConfig& cfg,
                        ParamMap& grads_g, ParamMap& grads_v, ParamMap& grads_d) {
    const AblationFlags& ab = bundle.ablation;
    SynthTrace synth;
    Tensor i_s = synthesize(bundle, triplet.left, triplet.right, &synth);
    const std::vector<Tensor> pred{i_s}, gt{triplet.middle}, lf{triplet.left}, rt{triplet.right};

    DecompTrace decomp;
    std::vector<Tensor> dec_l, dec_r;
    if (ab.use_vdn) {
        auto [dl, dr] = decompose(bundle, cfg.vdn_input_ground_truth ? triplet.middle : i_s, &decomp);
        dec_l.push_back(std::move(dl));
        dec_r.push_back(std::move(dr));
    }

    // theta_D gradient of L_disc.
    if (ab.use_adv) {
        StageTrace tr_real, tr_fake;
        const double d_real = discriminate(bundle, triplet.middle, &tr_real);
        const double d_fake = discriminate(bundle, i_s, &tr_fake);
        std::vector<double> g_real, g_fake;
        disc_loss_grad({d_real}, {d_fake}, g_real, g_fake);
        const std::string prob_layer = stage_output_layer(bundle.disc, "prob");
        std::map<std::string, Tensor> og;
        og.emplace(prob_layer, Tensor::full({1, 1, 1}, g_real[0]));
        stage_backward(bundle.disc, bundle.params.entries, "disc", tr_real, std::move(og), &grads_d, false);
        std::map<std::string, Tensor> og2;
        og2.emplace(prob_layer, Tensor::full({1, 1, 1}, g_fake[0]));
        stage_backward(bundle.disc, bundle.params.entries, "disc", tr_fake, std::move(og2), &grads_d, false);
    }

    // theta_V gradient of L_vc, plus dL_vc/dI^s for the theta_G chain.
    Tensor vc_input_grad;
    if (ab.use_vdn) {
        std::vector<Tensor> gvl, gvr;
        view_consistency_loss_grad(dec_l, dec_r, lf, rt, gvl, gvr);
        const NetworkSpec& vdec = bundle.vdn_decoder;
        const NetworkSpec& venc = bundle.vdn_encoder;
        std::map<std::string, Tensor> enc_og;
        if (ab.shared_vdn_decoder) {
            std::map<std::string, Tensor> og;
            og.emplace(stage_output_layer(vdec, "left"), std::move(gvl[0]));
            og.emplace(stage_output_layer(vdec, "right"), std::move(gvr[0]));
            auto ig = stage_backward(vdec, bundle.params.entries, "vdn/dec_s", decomp.dec_l, std::move(og), &grads_v, true);
            enc_og.emplace(stage_output_layer(venc, "proj"), std::move(ig.at("feat")));
        } else {
            std::map<std::string, Tensor> og_l, og_r;
            og_l.emplace(stage_output_layer(vdec, "image"), std::move(gvl[0]));
            og_r.emplace(stage_output_layer(vdec, "image"), std::move(gvr[0]));
            auto ig_l = stage_backward(vdec, bundle.params.entries, "vdn/dec_l", decomp.dec_l, std::move(og_l), &grads_v, true);
            auto ig_r = stage_backward(vdec, bundle.params.entries, "vdn/dec_r", decomp.dec_r, std::move(og_r), &grads_v, true);
            enc_og.emplace(stage_output_layer(venc, "proj_l"), std::move(ig_l.at("feat")));
            enc_og.emplace(stage_output_layer(venc, "proj_r"), std::move(ig_r.at("feat")));
        }
        auto ig = stage_backward(venc, bundle.params.entries, "vdn/enc", decomp.enc, std::move(enc_og), &grads_v,
                                 !cfg.vdn_input_ground_truth);
        if (!cfg.vdn_input_ground_truth) vc_input_grad = std::move(ig.at("middle"));
    }

    // theta_G gradient of L_G (adversarial term at the *current* theta_D).
    {
        std::vector<Tensor> gs = pixel_loss_grad(pred, gt);
        if (ab.use_sharp) {
            auto sg = sharpness_loss_grad(pred, gt, cfg.sharpness);
            sg[0].scale(cfg.weights.lambda3);
            gs[0] += sg[0];
        }
        if (ab.use_vdn && !cfg.vdn_input_ground_truth) {
            vc_input_grad.scale(cfg.weights.lambda1);
            gs[0] += vc_input_grad;
        }
        if (ab.use_adv) {
            StageTrace tr_fake;
            const double d_fake = discriminate(bundle, i_s, &tr_fake);
            const auto ga = adv_loss_grad({d_fake});
            std::map<std::string, Tensor> og;
            og.emplace(stage_output_layer(bundle.disc, "prob"), Tensor::full({1, 1, 1}, ga[0]));
            auto ig = stage_backward(bundle.disc, bundle.params.entries, "disc", tr_fake, std::move(og), nullptr, true);
            Tensor gimg = std::move(ig.at("image"));
            gimg.scale(cfg.weights.lambda2);
            gs[0] += gimg;
        }
        const NetworkSpec& enc = bundle.vsn_encoder;
        const NetworkSpec& dec = bundle.vsn_decoder;
        std::map<std::string, Tensor> og;
        og.emplace(stage_output_layer(dec, "image"), std::move(gs[0]));
        auto ig = stage_backward(dec, bundle.params.entries, "vsn/dec", synth.dec, std::move(og), &grads_g, true);
        std::map<std::string, Tensor> og_l, og_r;
        og_l.emplace(stage_output_layer(enc, "feat"), std::move(ig.at("ec6_l")));
        og_r.emplace(stage_output_layer(enc, "feat"), std::move(ig.at("ec6_r")));
        for (int k = 1; k <= 3; ++k) {
            const std::string skip_layer = stage_output_layer(enc, "skip" + std::to_string(k));
            og_l.emplace(skip_layer, std::move(ig.at("ecfeat" + std::to_string(k) + "_l")));
            og_r.emplace(skip_layer, std::move(ig.at("ecfeat" + std::to_string(k) + "_r")));
        }
        stage_backward(enc, bundle.params.entries, "vsn/enc", synth.enc_l, std::move(og_l), &grads_g, false);
        stage_backward(enc, bundle.params.entries, "vsn/enc", synth.enc_r, std::move(og_r), &grads_g, false);
    }
}

}  // namespace

GradCheckResult gradient_check(const ModelBundle& bundle, const ViewTriplet& triplet, const TrainConfig& cfg,
                               int samples_per_partition, std::uint64_t seed) {
    if (bundle.params.total_count() > 500)
        throw std::invalid_argument("gradient_check expects a tiny bundle (<= 500 parameters), got " +
                                    std::to_string(bundle.params.total_count()));
    ParamMap grads_g, grads_v, grads_d;
    analytic_gradients(bundle, triplet, cfg, grads_g, grads_v, grads_d);

    ModelBundle probe_bundle = bundle;  // parameters get nudged in place
    LossProbe probe{probe_bundle, triplet, cfg};

    GradCheckResult result;
    Rng rng(seed);
    const double h = 1e-4;
    const std::vector<std::pair<Partition, const ParamMap*>> parts = {
        {Partition::theta_G, &grads_g}, {Partition::theta_V, &grads_v}, {Partition::theta_D, &grads_d}};

    for (const auto& [partition, grads] : parts) {
        // All (entry, flat-index) coordinates of this partition.
        std::vector<std::pair<std::string, std::int64_t>> coords;
        for (const auto& [name, tt] : bundle.params.entries)
            if (ParameterSet::partition_of(name) == partition)
                for (std::int64_t i = 0; i < tt.numel(); ++i) coords.emplace_back(name, i);
        if (coords.empty()) continue;

        int accepted = 0, attempts = 0;
        const int max_attempts = samples_per_partition * 10;
        while (accepted < samples_per_partition && attempts < max_attempts) {
            ++attempts;
            const auto& [name, idx] = coords[rng.uniform_int(0, static_cast<int>(coords.size()) - 1)];
            double& theta = probe_bundle.params.entries.at(name).v[idx];
            const double saved = theta;
            auto fd_at = [&](double step) {
                theta = saved + step;
                const double up = probe.eval(partition);
                theta = saved - step;
                const double down = probe.eval(partition);
                theta = saved;
                return (up - down) / (2.0 * step);
            };
            const double fd1 = fd_at(h);
            const double fd2 = fd_at(h / 2.0);
            if (std::abs(fd1 - fd2) > 1e-3 * std::max({1.0, std::abs(fd1), std::abs(fd2)})) {
                ++result.excluded;  // straddles an activation kink
                continue;
            }
            auto git = grads->find(name);
            const double analytic = git != grads->end() ? git->second.v[idx] : 0.0;
            if (!std::isfinite(analytic)) throw TrainingAbort("non-finite analytic gradient at '" + name + "'");
            double rel = 0.0;
            if (std::abs(analytic) > 1e-12 || std::abs(fd2) > 1e-12)
                rel = std::abs(analytic - fd2) / std::max(std::abs(analytic) + std::abs(fd2), 1e-8);
            ++accepted;
            ++result.checked;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_name = name;
                result.worst_index = idx;
                result.worst_analytic = analytic;
                result.worst_numeric = fd2;
            }
        }
    }
    return result;
}

}  // namespace scgn
