#include "anogen/tps.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace anogen {

TpsWarp TpsWarp::make_grid(const RegionBox& region,
                           const Eigen::Matrix<Scalar, kPoints, 2>& displacements,
                           Scalar inset, Scalar bound) {
  if (inset <= 0 || inset >= 0.5)
    throw ParameterError("tps grid inset must be in (0, 0.5)");
  TpsWarp warp;
  warp.region = region;
  warp.displacements = displacements;
  warp.displacement_bound = bound;
  const Scalar stops[3] = {inset, 0.5, 1.0 - inset};
  for (int gy = 0; gy < 3; ++gy)
    for (int gx = 0; gx < 3; ++gx) {
      warp.control_points(gy * 3 + gx, 0) = stops[gx];
      warp.control_points(gy * 3 + gx, 1) = stops[gy];
    }
  warp.validate();
  return warp;
}

void TpsWarp::validate() const {
  if (region.width() <= 0 || region.height() <= 0)
    throw ParameterError("tps region is empty");
  for (int i = 0; i < kPoints; ++i) {
    if (control_points(i, 0) < 0 || control_points(i, 0) > 1 ||
        control_points(i, 1) < 0 || control_points(i, 1) > 1)
      throw ParameterError("tps control points must lie inside the region");
    if (std::abs(displacements(i, 0)) > displacement_bound ||
        std::abs(displacements(i, 1)) > displacement_bound)
      throw ParameterError("tps displacement exceeds bound");
  }
  for (int i = 0; i < kPoints; ++i)
    for (int j = i + 1; j < kPoints; ++j)
      if ((control_points.row(i) - control_points.row(j)).norm() < 1e-9)
        throw ParameterError("tps control points duplicated");
}

namespace {

// U(r) = r^2 log(r^2), continuous at r = 0.
inline Scalar tps_kernel(Scalar r2) {
  return r2 > 0 ? r2 * std::log(r2) : Scalar(0);
}

}  // namespace

TpsMap::TpsMap(const TpsWarp& warp) : warp_(warp) {
  warp_.validate();
  constexpr int n = TpsWarp::kPoints;
  Eigen::Matrix<Scalar, n + 3, n + 3> system;
  system.setZero();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Scalar r2 =
          (warp_.control_points.row(i) - warp_.control_points.row(j))
              .squaredNorm();
      system(i, j) = tps_kernel(r2);
    }
    system(i, n) = 1;
    system(i, n + 1) = warp_.control_points(i, 0);
    system(i, n + 2) = warp_.control_points(i, 1);
    system(n, i) = 1;
    system(n + 1, i) = warp_.control_points(i, 0);
    system(n + 2, i) = warp_.control_points(i, 1);
  }

  Eigen::Matrix<Scalar, n + 3, 2> rhs;
  rhs.setZero();
  rhs.topRows(n) = warp_.control_points + warp_.displacements;

  Eigen::ColPivHouseholderQR<Eigen::Matrix<Scalar, n + 3, n + 3>> qr(system);
  if (qr.rank() < n + 3)
    throw ParameterError("tps system singular (degenerate control points)");
  coeff_ = qr.solve(rhs);
}

void TpsMap::map(Scalar x, Scalar y, Scalar& sx, Scalar& sy) const {
  const Scalar rw = warp_.region.width();
  const Scalar rh = warp_.region.height();
  const Scalar u = (x - warp_.region.x0) / rw;
  const Scalar v = (y - warp_.region.y0) / rh;

  Scalar fu = coeff_(TpsWarp::kPoints, 0) + coeff_(TpsWarp::kPoints + 1, 0) * u +
              coeff_(TpsWarp::kPoints + 2, 0) * v;
  Scalar fv = coeff_(TpsWarp::kPoints, 1) + coeff_(TpsWarp::kPoints + 1, 1) * u +
              coeff_(TpsWarp::kPoints + 2, 1) * v;
  for (int i = 0; i < TpsWarp::kPoints; ++i) {
    const Scalar du = u - warp_.control_points(i, 0);
    const Scalar dv = v - warp_.control_points(i, 1);
    const Scalar k = tps_kernel(du * du + dv * dv);
    fu += coeff_(i, 0) * k;
    fv += coeff_(i, 1) * k;
  }
  sx = warp_.region.x0 + fu * rw;
  sy = warp_.region.y0 + fv * rh;
}

WarpField solve_tps(const TpsWarp& warp, int height, int width, Scalar feather) {
  if (height <= 0 || width <= 0)
    throw DimensionError("solve_tps raster must be positive");
  TpsMap tps(warp);
  WarpField field;
  field.sx.resize(height, width);
  field.sy.resize(height, width);
  const RegionBox& box = warp.region;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Scalar px = static_cast<Scalar>(x);
      const Scalar py = static_cast<Scalar>(y);
      if (!box.contains(px, py)) {
        field.sx(y, x) = px;
        field.sy(y, x) = py;
        continue;
      }
      Scalar weight = 1;
      if (feather > 0) {
        const Scalar edge_dist =
            std::min(std::min(px - box.x0, box.x1 - px),
                     std::min(py - box.y0, box.y1 - py));
        weight = std::clamp(edge_dist / feather, Scalar(0), Scalar(1));
      }
      Scalar sx, sy;
      tps.map(px, py, sx, sy);
      field.sx(y, x) = px + weight * (sx - px);
      field.sy(y, x) = py + weight * (sy - py);
    }
  }
  return field;
}

ImagePlane apply_warp(const ImagePlane& plane, const WarpField& field) {
  const int h = plane.height(), w = plane.width();
  if (field.sx.rows() != h || field.sx.cols() != w)
    throw DimensionError("warp field does not match plane shape");
  ImagePlane out = plane;
  for (std::size_t c = 0; c < plane.channels.size(); ++c) {
    const auto& src = plane.channels[c];
    auto& dst = out.channels[c];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Scalar fx = std::clamp(field.sx(y, x), Scalar(0), Scalar(w - 1));
        const Scalar fy = std::clamp(field.sy(y, x), Scalar(0), Scalar(h - 1));
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const Scalar ax = fx - x0;
        const Scalar ay = fy - y0;
        dst(y, x) = (1 - ay) * ((1 - ax) * src(y0, x0) + ax * src(y0, x1)) +
                    ay * ((1 - ax) * src(y1, x0) + ax * src(y1, x1));
      }
  }
  return out;
}

ImagePlane apply_warp(const ImagePlane& plane, const TpsWarp& warp,
                      Scalar feather) {
  return apply_warp(plane, solve_tps(warp, plane.height(), plane.width(), feather));
}

}  // namespace anogen
