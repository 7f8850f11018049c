#pragma once

#include <filesystem>

#include "scgn/tensor.hpp"

namespace scgn {

/// Reads an 8-bit PNG as (h,w,3) with values in [0,255]. Grayscale and
/// palette images are expanded to RGB; alpha is dropped.
Tensor read_png(const std::filesystem::path& file);

/// Writes a (h,w,3) image with values in [0,255] (rounded to nearest) as an
/// 8-bit RGB PNG.
void write_png(const std::filesystem::path& file, const Tensor& image);

}  // namespace scgn
