#pragma once

#include <Eigen/Core>

#include "anogen/plane.hpp"

namespace anogen {

// Axis-aligned box in pixel coordinates, half-open semantics not needed:
// the box is treated as a continuous region [x0,x1] x [y0,y1].
struct RegionBox {
  Scalar x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  Scalar width() const { return x1 - x0; }
  Scalar height() const { return y1 - y0; }
  bool contains(Scalar x, Scalar y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

// Local thin-plate-spline warp: a 3x3 control grid placed inside a
// region, each point shifted by a displacement given as a fraction of
// the region size. The grid is inset from the region boundary so the
// control correspondences sit inside the full-strength interior of the
// feathered field.
struct TpsWarp {
  static constexpr int kPoints = 9;

  RegionBox region;
  // Normalized (u,v) positions inside the region, row-major grid order.
  Eigen::Matrix<Scalar, kPoints, 2> control_points;
  // Normalized (du,dv) shifts, same units as control_points.
  Eigen::Matrix<Scalar, kPoints, 2> displacements;
  Scalar displacement_bound = 0.1;

  // 3x3 grid at {inset, 0.5, 1-inset} in both axes.
  static TpsWarp make_grid(const RegionBox& region,
                           const Eigen::Matrix<Scalar, kPoints, 2>& displacements,
                           Scalar inset = 0.2, Scalar bound = 0.1);

  void validate() const;
};

// Solved TPS interpolant mapping pixel coordinates to source pixel
// coordinates. map(x, y) interpolates every control correspondence
// exactly: control point p (in pixels) maps to p + displacement.
class TpsMap {
 public:
  TpsMap(const TpsWarp& warp);

  // Raw interpolant, defined everywhere (no region masking).
  void map(Scalar x, Scalar y, Scalar& sx, Scalar& sy) const;

  const TpsWarp& warp() const { return warp_; }

 private:
  TpsWarp warp_;
  // Per-axis coefficients: 9 kernel weights followed by affine (1, u, v).
  Eigen::Matrix<Scalar, 12, 2> coeff_;
};

// Dense backward map. Inside the region the TPS map applies at full
// strength except within `feather` pixels of the region boundary, where
// it blends linearly into the identity; outside the region the field is
// the identity exactly.
struct WarpField {
  PlaneChannel<Scalar> sx, sy;
};

WarpField solve_tps(const TpsWarp& warp, int height, int width,
                    Scalar feather = 4.0);

// Bilinear resampling along the field; out-of-bounds samples clamp to
// the border.
ImagePlane apply_warp(const ImagePlane& plane, const WarpField& field);
ImagePlane apply_warp(const ImagePlane& plane, const TpsWarp& warp,
                      Scalar feather = 4.0);

}  // namespace anogen
