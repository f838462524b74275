#include "anogen/plane.hpp"

#include <algorithm>
#include <cmath>

namespace anogen {

const char* to_string(RangeTag tag) {
  switch (tag) {
    case RangeTag::Unit: return "unit";
    case RangeTag::Signed: return "signed";
    case RangeTag::Binary: return "binary";
  }
  return "?";
}

const char* to_string(PlaneRole role) {
  switch (role) {
    case PlaneRole::Color: return "color";
    case PlaneRole::Depth: return "depth";
    case PlaneRole::Edge: return "edge";
    case PlaneRole::Mask: return "mask";
    case PlaneRole::FusionMap: return "fusion_map";
  }
  return "?";
}

void validate_plane(const ImagePlane& plane, Scalar tolerance) {
  if (plane.height() <= 0 || plane.width() <= 0)
    throw DimensionError("plane has empty raster");
  if (plane.channel_count() != channels_for_role(plane.role))
    throw DimensionError(std::string("plane role ") + to_string(plane.role) +
                         " expects " +
                         std::to_string(channels_for_role(plane.role)) +
                         " channels, got " +
                         std::to_string(plane.channel_count()));
  auto [lo, hi] = range_bounds(plane.range_tag);
  for (const auto& ch : plane.channels) {
    if (ch.rows() != plane.height() || ch.cols() != plane.width())
      throw DimensionError("plane channels disagree on shape");
    if ((ch < lo - tolerance).any() || (ch > hi + tolerance).any())
      throw RangeError(std::string("plane values escape declared range ") +
                       to_string(plane.range_tag));
  }
}

ImagePlane fuse(const ImagePlane& content, const ImagePlane& source,
                const ImagePlane& map) {
  if (!content.same_shape(source) || !content.same_shape(map))
    throw DimensionError("fuse: planes disagree on H x W");
  if (content.channel_count() != source.channel_count())
    throw DimensionError("fuse: content and source channel counts differ");
  if (map.channel_count() != 1)
    throw DimensionError("fuse: fusion map must be single channel");
  if ((map.chan(0) < 0.0).any() || (map.chan(0) > 1.0).any())
    throw RangeError("fuse: fusion map escapes [0,1]");

  ImagePlane out = content;
  for (int c = 0; c < content.channel_count(); ++c)
    out.chan(c) = fuse_channel(content.chan(c), source.chan(c), map.chan(0));
  return out;
}

ImagePlane convert_range(const ImagePlane& plane, RangeTag target) {
  if (plane.range_tag == target) return plane;
  auto [from_lo, from_hi] = range_bounds(plane.range_tag);
  auto [to_lo, to_hi] = range_bounds(target);
  const Scalar scale = (to_hi - to_lo) / (from_hi - from_lo);
  ImagePlane out = plane;
  out.range_tag = target;
  for (auto& ch : out.channels) ch = (ch - from_lo) * scale + to_lo;
  return out;
}

ImagePlane luminance(const ImagePlane& color) {
  if (color.channel_count() != 3)
    throw DimensionError("luminance expects a 3-channel plane");
  ImagePlane out(color.height(), color.width(), PlaneRole::Depth,
                 color.range_tag);
  out.chan(0) = 0.299 * color.chan(0) + 0.587 * color.chan(1) +
                0.114 * color.chan(2);
  return out;
}

namespace {

std::vector<Scalar> gaussian_kernel(Scalar sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<Scalar> k(static_cast<std::size_t>(2 * radius + 1));
  Scalar sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const Scalar v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable convolution with border clamp.
PlaneChannel<Scalar> blur_channel(const PlaneChannel<Scalar>& in,
                                  const std::vector<Scalar>& k) {
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  const int radius = (static_cast<int>(k.size()) - 1) / 2;
  PlaneChannel<Scalar> tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Scalar acc = 0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, w - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * in(y, xx);
      }
      tmp(y, x) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Scalar acc = 0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, h - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * tmp(yy, x);
      }
      out(y, x) = acc;
    }
  return out;
}

}  // namespace

ImagePlane gaussian_blur(const ImagePlane& plane, Scalar sigma) {
  if (sigma <= 0) return plane;
  const auto k = gaussian_kernel(sigma);
  ImagePlane out = plane;
  for (auto& ch : out.channels) ch = blur_channel(ch, k);
  return out;
}

namespace {

template <bool Nearest>
ImagePlane resize_impl(const ImagePlane& plane, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0)
    throw DimensionError("resize target must be positive");
  const int h = plane.height(), w = plane.width();
  ImagePlane out = plane;
  const Scalar sy = static_cast<Scalar>(h) / out_h;
  const Scalar sx = static_cast<Scalar>(w) / out_w;
  for (std::size_t c = 0; c < plane.channels.size(); ++c) {
    PlaneChannel<Scalar> dst(out_h, out_w);
    const auto& src = plane.channels[c];
    for (int y = 0; y < out_h; ++y) {
      const Scalar fy = (y + 0.5) * sy - 0.5;
      for (int x = 0; x < out_w; ++x) {
        const Scalar fx = (x + 0.5) * sx - 0.5;
        if constexpr (Nearest) {
          const int yy = std::clamp(static_cast<int>(std::lround(fy)), 0, h - 1);
          const int xx = std::clamp(static_cast<int>(std::lround(fx)), 0, w - 1);
          dst(y, x) = src(yy, xx);
        } else {
          const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, h - 1);
          const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, w - 1);
          const int y1 = std::min(y0 + 1, h - 1);
          const int x1 = std::min(x0 + 1, w - 1);
          const Scalar ay = std::clamp(fy - y0, Scalar(0), Scalar(1));
          const Scalar ax = std::clamp(fx - x0, Scalar(0), Scalar(1));
          dst(y, x) = (1 - ay) * ((1 - ax) * src(y0, x0) + ax * src(y0, x1)) +
                      ay * ((1 - ax) * src(y1, x0) + ax * src(y1, x1));
        }
      }
    }
    out.channels[c] = std::move(dst);
  }
  return out;
}

}  // namespace

ImagePlane resize_bilinear(const ImagePlane& plane, int out_h, int out_w) {
  return resize_impl<false>(plane, out_h, out_w);
}

ImagePlane resize_nearest(const ImagePlane& plane, int out_h, int out_w) {
  return resize_impl<true>(plane, out_h, out_w);
}

Scalar border_median(const ImagePlane& plane) {
  const auto& ch = plane.chan(0);
  const int h = plane.height(), w = plane.width();
  std::vector<Scalar> ring;
  ring.reserve(static_cast<std::size_t>(2 * (h + w)));
  for (int x = 0; x < w; ++x) {
    ring.push_back(ch(0, x));
    if (h > 1) ring.push_back(ch(h - 1, x));
  }
  for (int y = 1; y + 1 < h; ++y) {
    ring.push_back(ch(y, 0));
    if (w > 1) ring.push_back(ch(y, w - 1));
  }
  auto mid = ring.begin() + static_cast<std::ptrdiff_t>(ring.size() / 2);
  std::nth_element(ring.begin(), mid, ring.end());
  return *mid;
}

ImagePlane minmax_normalize(const ImagePlane& plane) {
  ImagePlane out = plane;
  out.range_tag = RangeTag::Unit;
  const Scalar lo = plane.chan(0).minCoeff();
  const Scalar hi = plane.chan(0).maxCoeff();
  if (hi - lo < 1e-12) {
    out.chan(0).setConstant(0.5);
  } else {
    out.chan(0) = (plane.chan(0) - lo) / (hi - lo);
  }
  return out;
}

Scalar max_abs_diff(const ImagePlane& a, const ImagePlane& b) {
  if (!a.same_shape(b) || a.channel_count() != b.channel_count())
    throw DimensionError("max_abs_diff: shape mismatch");
  Scalar m = 0;
  for (int c = 0; c < a.channel_count(); ++c)
    m = std::max(m, (a.chan(c) - b.chan(c)).abs().maxCoeff());
  return m;
}

}  // namespace anogen
