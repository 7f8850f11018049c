#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "scgn/trainer.hpp"

namespace scgn {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'C', 'G', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

json ablation_to_json(const AblationFlags& a) {
    return json{{"use_vdn", a.use_vdn},
                {"shared_vdn_decoder", a.shared_vdn_decoder},
                {"use_adv", a.use_adv},
                {"use_sharp", a.use_sharp},
                {"mvsn", a.mvsn}};
}

AblationFlags ablation_from_json(const json& j) {
    AblationFlags a;
    a.use_vdn = j.at("use_vdn").get<bool>();
    a.shared_vdn_decoder = j.at("shared_vdn_decoder").get<bool>();
    a.use_adv = j.at("use_adv").get<bool>();
    a.use_sharp = j.at("use_sharp").get<bool>();
    a.mvsn = j.at("mvsn").get<bool>();
    return a;
}

void write_raw(std::ofstream& out, const void* data, std::size_t bytes) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::ifstream& in, void* data, std::size_t bytes, const char* what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
    if (in.gcount() != static_cast<std::streamsize>(bytes))
        throw std::runtime_error(std::string("checkpoint truncated while reading ") + what);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& file, const ModelBundle& bundle, const TrainState& state) {
    json header;
    header["resolution"] = bundle.resolution;
    header["width_scale"] = bundle.width_scale;
    header["ablation"] = ablation_to_json(bundle.ablation);
    header["iteration"] = state.iteration;
    header["adam_steps"] = state.adam_steps;
    header["rng"] = state.rng.state();
    json specs;
    specs["vsn_encoder"] = json::parse(bundle.vsn_encoder.to_json());
    specs["vsn_decoder"] = json::parse(bundle.vsn_decoder.to_json());
    if (bundle.ablation.use_vdn) {
        specs["vdn_encoder"] = json::parse(bundle.vdn_encoder.to_json());
        specs["vdn_decoder"] = json::parse(bundle.vdn_decoder.to_json());
    }
    if (bundle.ablation.use_adv) specs["disc"] = json::parse(bundle.disc.to_json());
    header["specs"] = std::move(specs);

    json tensors = json::array();
    auto add_entries = [&tensors](const ParamMap& map, const char* kind) {
        for (const auto& [name, t] : map)
            tensors.push_back(json{{"name", name}, {"kind", kind}, {"shape", t.shape}});
    };
    add_entries(bundle.params.entries, "param");
    add_entries(state.moment1, "m1");
    add_entries(state.moment2, "m2");
    header["tensors"] = std::move(tensors);

    const std::string header_text = header.dump();
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + file.string());
    write_raw(out, kMagic, sizeof(kMagic));
    write_raw(out, &kVersion, sizeof(kVersion));
    const std::uint64_t len = header_text.size();
    write_raw(out, &len, sizeof(len));
    write_raw(out, header_text.data(), header_text.size());
    auto dump_map = [&out](const ParamMap& map) {
        for (const auto& [name, t] : map) write_raw(out, t.v.data(), t.v.size() * sizeof(double));
    };
    dump_map(bundle.params.entries);
    dump_map(state.moment1);
    dump_map(state.moment2);
    out.flush();
    if (!out) throw std::runtime_error("failed writing checkpoint: " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + file.string());
    char magic[8];
    read_raw(in, magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + file.string());
    std::uint32_t version = 0;
    read_raw(in, &version, sizeof(version), "version");
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    std::uint64_t len = 0;
    read_raw(in, &len, sizeof(len), "header length");
    std::string header_text(len, '\0');
    read_raw(in, header_text.data(), len, "header");
    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("corrupt checkpoint header: ") + e.what());
    }

    Checkpoint ck;
    ck.bundle.resolution = header.at("resolution").get<int>();
    ck.bundle.width_scale = header.at("width_scale").get<double>();
    ck.bundle.ablation = ablation_from_json(header.at("ablation"));
    const json& specs = header.at("specs");
    ck.bundle.vsn_encoder = NetworkSpec::from_json(specs.at("vsn_encoder").dump());
    ck.bundle.vsn_decoder = NetworkSpec::from_json(specs.at("vsn_decoder").dump());
    if (ck.bundle.ablation.use_vdn) {
        ck.bundle.vdn_encoder = NetworkSpec::from_json(specs.at("vdn_encoder").dump());
        ck.bundle.vdn_decoder = NetworkSpec::from_json(specs.at("vdn_decoder").dump());
    }
    if (ck.bundle.ablation.use_adv) ck.bundle.disc = NetworkSpec::from_json(specs.at("disc").dump());

    ck.state.iteration = header.at("iteration").get<std::int64_t>();
    ck.state.adam_steps = header.at("adam_steps").get<std::map<std::string, std::int64_t>>();
    ck.state.rng.set_state(header.at("rng").get<std::string>());

    // Shapes the specs demand, for loud mismatch reporting.
    std::map<std::string, std::vector<int>> expected;
    for (const auto& [name, shape] : ck.bundle.param_entries()) expected[name] = shape;

    for (const auto& jt : header.at("tensors")) {
        const std::string name = jt.at("name").get<std::string>();
        const std::string kind = jt.at("kind").get<std::string>();
        const std::vector<int> shape = jt.at("shape").get<std::vector<int>>();
        auto it = expected.find(name);
        if (it == expected.end())
            throw std::runtime_error("checkpoint tensor '" + name + "' does not belong to the stored specs");
        if (it->second != shape)
            throw std::runtime_error("checkpoint tensor '" + name + "' has shape " + shape_str(shape) +
                                     " but the spec requires " + shape_str(it->second));
        Tensor t(shape);
        read_raw(in, t.v.data(), t.v.size() * sizeof(double), name.c_str());
        if (kind == "param") ck.bundle.params.entries.emplace(name, std::move(t));
        else if (kind == "m1") ck.state.moment1.emplace(name, std::move(t));
        else if (kind == "m2") ck.state.moment2.emplace(name, std::move(t));
        else throw std::runtime_error("unknown checkpoint tensor kind '" + kind + "'");
    }
    for (const auto& [name, shape] : expected) {
        if (!ck.bundle.params.entries.count(name))
            throw std::runtime_error("checkpoint is missing parameter '" + name + "'");
        if (!ck.state.moment1.count(name) || !ck.state.moment2.count(name))
            throw std::runtime_error("checkpoint is missing optimizer moments for '" + name + "'");
    }
    return ck;
}

}  // namespace scgn
