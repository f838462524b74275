#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "anogen/common.hpp"

namespace anogen {

// Value-range convention carried by every plane. Stored/loaded files and
// masks are unit [0,1]; generator-facing planes are signed [-1,1];
// conversion happens at module boundaries.
enum class RangeTag { Unit, Signed, Binary };

enum class PlaneRole { Color, Depth, Edge, Mask, FusionMap };

const char* to_string(RangeTag tag);
const char* to_string(PlaneRole role);

inline int channels_for_role(PlaneRole role) {
  return role == PlaneRole::Color ? 3 : 1;
}

template <typename S>
using PlaneChannel = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// H x W x C raster with a declared range and role. Channels are dense
// row-major Eigen arrays so per-plane math stays expression-friendly.
template <typename S>
struct BasicImagePlane {
  using Channel = PlaneChannel<S>;

  std::vector<Channel> channels;
  RangeTag range_tag = RangeTag::Unit;
  PlaneRole role = PlaneRole::Mask;

  BasicImagePlane() = default;
  BasicImagePlane(int height, int width, PlaneRole r, RangeTag tag,
                  S fill = S(0))
      : range_tag(tag), role(r) {
    if (height <= 0 || width <= 0)
      throw DimensionError("plane dimensions must be positive");
    channels.assign(static_cast<std::size_t>(channels_for_role(r)),
                    Channel::Constant(height, width, fill));
  }

  int height() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  int width() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
  int channel_count() const { return static_cast<int>(channels.size()); }

  Channel& chan(int c) { return channels.at(static_cast<std::size_t>(c)); }
  const Channel& chan(int c) const { return channels.at(static_cast<std::size_t>(c)); }

  bool same_shape(const BasicImagePlane& other) const {
    return height() == other.height() && width() == other.width();
  }
};

using ImagePlane = BasicImagePlane<Scalar>;

// Range bounds for a tag: Unit/Binary -> [0,1], Signed -> [-1,1].
inline std::pair<Scalar, Scalar> range_bounds(RangeTag tag) {
  return tag == RangeTag::Signed ? std::pair<Scalar, Scalar>{-1.0, 1.0}
                                 : std::pair<Scalar, Scalar>{0.0, 1.0};
}

void validate_plane(const ImagePlane& plane, Scalar tolerance = 0.0);

// Blend of content and source under a fusion map, written in the
// linear-in-map form out = content + map * (source - content). The map
// must lie in [0,1]; content and source must share shape and channels.
template <typename DC, typename DS, typename DM>
auto fuse_channel(const Eigen::ArrayBase<DC>& content,
                  const Eigen::ArrayBase<DS>& source,
                  const Eigen::ArrayBase<DM>& map) {
  return (content + map * (source - content)).eval();
}

ImagePlane fuse(const ImagePlane& content, const ImagePlane& source,
                const ImagePlane& map);

ImagePlane convert_range(const ImagePlane& plane, RangeTag target);

// ---- plane utilities shared by conditioning / augment / manipulate ----

// Rec.601 luma of a 3-channel color plane (single-channel result keeps
// the input's range tag).
ImagePlane luminance(const ImagePlane& color);

ImagePlane gaussian_blur(const ImagePlane& plane, Scalar sigma);

// Bilinear resize; mask/binary planes should use resize_nearest instead.
ImagePlane resize_bilinear(const ImagePlane& plane, int out_h, int out_w);
ImagePlane resize_nearest(const ImagePlane& plane, int out_h, int out_w);

// Median of the one-pixel border ring of channel 0.
Scalar border_median(const ImagePlane& plane);

// Min-max normalize channel 0 into [0,1]; a constant plane maps to 0.5.
ImagePlane minmax_normalize(const ImagePlane& plane);

Scalar max_abs_diff(const ImagePlane& a, const ImagePlane& b);

}  // namespace anogen
