#pragma once

#include <string>

#include "anogen/plane.hpp"

namespace anogen {

// Aligned color / depth / edge planes for one sample.
struct ConditionTriplet {
  ImagePlane color;
  ImagePlane depth;
  ImagePlane edge;

  void validate() const {
    validate_plane(color);
    validate_plane(depth);
    validate_plane(edge);
    if (!color.same_shape(depth) || !color.same_shape(edge))
      throw DimensionError("condition triplet planes disagree on H x W");
  }

  int height() const { return color.height(); }
  int width() const { return color.width(); }
};

// RGB_LEVEL targets a 3-channel color output; DEPTH_LEVEL a 1-channel
// depth/edge output.
enum class GenerationMode { RgbLevel, DepthLevel };

inline int output_channels(GenerationMode mode) {
  return mode == GenerationMode::RgbLevel ? 3 : 1;
}

inline const char* to_string(GenerationMode mode) {
  return mode == GenerationMode::RgbLevel ? "rgb" : "depth";
}

// The two decoder groups: depth-structured (AHD) and edge-structured (AHE).
enum class DecoderGroup { AHD, AHE };

inline const char* to_string(DecoderGroup g) {
  return g == DecoderGroup::AHD ? "ahd" : "ahe";
}

// One decoder group's output: raw anomaly source, fusion map in [0,1],
// and the fused result (fused == fuse(content, anomaly_source, fusion_map)).
struct GenerationResult {
  ImagePlane anomaly_source;
  ImagePlane fusion_map;
  ImagePlane fused;
  DecoderGroup decoder = DecoderGroup::AHD;
};

}  // namespace anogen
