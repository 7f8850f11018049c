#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scgn/tensor.hpp"

namespace scgn {

/// One (left, middle/ground-truth, right) sample. All three images share
/// shape and live in the (-1,1) normalized range once past the pipeline.
struct ViewTriplet {
    Tensor left;
    Tensor middle;
    Tensor right;
    std::string id;
};

struct ManifestEntry {
    std::string id;
    std::filesystem::path left, middle, right;
    std::optional<std::pair<double, double>> angles;  // per-view capture angles, if recorded
};

struct DatasetManifest {
    std::filesystem::path root;
    std::string split;
    int resolution = 224;
    std::vector<ManifestEntry> entries;
};

/// Center-crop to min(H,W)^2, resize to `resolution` (bilinear), then map
/// [0,255] -> (-1,1) via x/127.5 - 1.
Tensor preprocess(const Tensor& raw, int resolution);

/// Inverse normalization: (x+1)*127.5 clamped to [0,255]. Returns the clamp
/// count through the optional counter.
Tensor denormalize(const Tensor& img, std::int64_t* clamped_count = nullptr);

/// Loads `<root>/<split>/<id>/{left,middle,right}.png` triplets, ordered
/// lexicographically by id. Throws naming the offending id on missing files.
DatasetManifest load_manifest(const std::filesystem::path& root, const std::string& split);

/// Materializes a manifest into preprocessed triplets.
std::vector<ViewTriplet> load_triplets(const DatasetManifest& manifest, int resolution);

/// Adapter for frame-sequence datasets: for a sorted frame list, yields
/// (t-K, t, t+K) triplets around every valid center frame.
std::vector<ManifestEntry> triplets_from_frames(const std::vector<std::filesystem::path>& frames, int interval);

/// Deterministic procedural triplets: layered shapes on a gradient background
/// seen from three horizontal camera offsets (-d, 0, +d). Returned images are
/// (-1,1)-normalized at the requested resolution.
std::vector<ViewTriplet> synth_triplets(int count, int resolution, std::uint64_t seed,
                                        int max_disparity = -1 /* -1: resolution/16 */);

}  // namespace scgn
