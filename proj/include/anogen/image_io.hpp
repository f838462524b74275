#pragma once

#include <filesystem>

#include "anogen/plane.hpp"

namespace anogen {

// PNG (8/16-bit) and JPEG readers; writers emit deterministic PNG bytes
// (fixed compression settings, no ancillary chunks) so identical planes
// produce identical files.

ImagePlane load_color_image(const std::filesystem::path& path);

// Single-channel loader; 16-bit PNGs are normalized by 65535, 8-bit by 255.
ImagePlane load_gray_image(const std::filesystem::path& path, PlaneRole role);

void save_png8(const ImagePlane& plane, const std::filesystem::path& path);
void save_png16_gray(const ImagePlane& plane, const std::filesystem::path& path);

// Raw float64 plane container used by the condition cache, where cached
// planes must round-trip bit-exactly.
void save_raw_plane(const ImagePlane& plane, const std::filesystem::path& path);
ImagePlane load_raw_plane(const std::filesystem::path& path);

}  // namespace anogen
