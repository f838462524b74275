#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "anogen/rng.hpp"
#include "anogen/tps.hpp"

using namespace anogen;

namespace {

// Independent oracle: hand-rolled Gaussian elimination over the full
// kernel matrix plus direct kernel evaluation. Shares no code with the
// library solver.
struct OracleTps {
  Eigen::Matrix<double, 12, 2> coeff;
  Eigen::Matrix<double, 9, 2> points;
  RegionBox region;

  static double kernel(double r2) { return r2 > 0 ? r2 * std::log(r2) : 0.0; }

  explicit OracleTps(const TpsWarp& warp) : points(warp.control_points),
                                            region(warp.region) {
    double a[12][14];  // augmented with two rhs columns
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 14; ++j) a[i][j] = 0;
    for (int i = 0; i < 9; ++i) {
      for (int j = 0; j < 9; ++j) {
        const double dx = points(i, 0) - points(j, 0);
        const double dy = points(i, 1) - points(j, 1);
        a[i][j] = kernel(dx * dx + dy * dy);
      }
      a[i][9] = 1;
      a[i][10] = points(i, 0);
      a[i][11] = points(i, 1);
      a[9][i] = 1;
      a[10][i] = points(i, 0);
      a[11][i] = points(i, 1);
      a[i][12] = points(i, 0) + warp.displacements(i, 0);
      a[i][13] = points(i, 1) + warp.displacements(i, 1);
    }
    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < 12; ++col) {
      int pivot = col;
      for (int r = col + 1; r < 12; ++r)
        if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
      for (int j = 0; j < 14; ++j) std::swap(a[col][j], a[pivot][j]);
      REQUIRE(std::abs(a[col][col]) > 1e-12);
      for (int r = 0; r < 12; ++r) {
        if (r == col) continue;
        const double f = a[r][col] / a[col][col];
        for (int j = col; j < 14; ++j) a[r][j] -= f * a[col][j];
      }
    }
    for (int i = 0; i < 12; ++i) {
      coeff(i, 0) = a[i][12] / a[i][i];
      coeff(i, 1) = a[i][13] / a[i][i];
    }
  }

  void map(double px, double py, double& sx, double& sy) const {
    const double u = (px - region.x0) / region.width();
    const double v = (py - region.y0) / region.height();
    double fu = coeff(9, 0) + coeff(10, 0) * u + coeff(11, 0) * v;
    double fv = coeff(9, 1) + coeff(10, 1) * u + coeff(11, 1) * v;
    for (int i = 0; i < 9; ++i) {
      const double du = u - points(i, 0);
      const double dv = v - points(i, 1);
      const double k = kernel(du * du + dv * dv);
      fu += coeff(i, 0) * k;
      fv += coeff(i, 1) * k;
    }
    sx = region.x0 + fu * region.width();
    sy = region.y0 + fv * region.height();
  }
};

TpsWarp random_warp(Rng& rng, int res = 48) {
  RegionBox box;
  box.x0 = uniform(rng, 2, res / 3);
  box.y0 = uniform(rng, 2, res / 3);
  box.x1 = box.x0 + uniform(rng, res / 4, res / 2);
  box.y1 = box.y0 + uniform(rng, res / 4, res / 2);
  Eigen::Matrix<Scalar, 9, 2> disp;
  for (int i = 0; i < 9; ++i) {
    disp(i, 0) = uniform(rng, -0.1, 0.1);
    disp(i, 1) = uniform(rng, -0.1, 0.1);
  }
  return TpsWarp::make_grid(box, disp);
}

}  // namespace

TEST_CASE("tps zero displacements give the identity map") {
  RegionBox box{10, 10, 40, 40};
  Eigen::Matrix<Scalar, 9, 2> disp = Eigen::Matrix<Scalar, 9, 2>::Zero();
  TpsMap map(TpsWarp::make_grid(box, disp));
  Rng rng = make_rng(10, "tps-identity");
  for (int i = 0; i < 20; ++i) {
    const Scalar x = uniform(rng, 10, 40), y = uniform(rng, 10, 40);
    Scalar sx, sy;
    map.map(x, y, sx, sy);
    CHECK(std::abs(sx - x) < 1e-9);
    CHECK(std::abs(sy - y) < 1e-9);
  }
}

TEST_CASE("tps constant displacement is pure translation") {
  RegionBox box{8, 12, 44, 40};
  Eigen::Matrix<Scalar, 9, 2> disp;
  disp.col(0).setConstant(0.05);
  disp.col(1).setConstant(-0.03);
  TpsMap map(TpsWarp::make_grid(box, disp, 0.2, 0.1));
  Rng rng = make_rng(11, "tps-translate");
  for (int i = 0; i < 20; ++i) {
    const Scalar x = uniform(rng, 9, 43), y = uniform(rng, 13, 39);
    Scalar sx, sy;
    map.map(x, y, sx, sy);
    CHECK(std::abs(sx - (x + 0.05 * box.width())) < 1e-6);
    CHECK(std::abs(sy - (y - 0.03 * box.height())) < 1e-6);
  }
}

TEST_CASE("tps interpolates all control correspondences") {
  Rng rng = make_rng(12, "tps-interp");
  for (int trial = 0; trial < 20; ++trial) {
    const TpsWarp warp = random_warp(rng);
    TpsMap map(warp);
    for (int i = 0; i < 9; ++i) {
      const Scalar px = warp.region.x0 + warp.control_points(i, 0) * warp.region.width();
      const Scalar py = warp.region.y0 + warp.control_points(i, 1) * warp.region.height();
      Scalar sx, sy;
      map.map(px, py, sx, sy);
      const Scalar ex = px + warp.displacements(i, 0) * warp.region.width();
      const Scalar ey = py + warp.displacements(i, 1) * warp.region.height();
      CHECK(std::abs(sx - ex) < 1e-6);
      CHECK(std::abs(sy - ey) < 1e-6);
    }
  }
}

TEST_CASE("tps agrees with the independent dense-solve oracle") {
  Rng rng = make_rng(13, "tps-oracle");
  for (int trial = 0; trial < 20; ++trial) {
    const TpsWarp warp = random_warp(rng);
    TpsMap map(warp);
    OracleTps oracle(warp);
    for (int i = 0; i < 10; ++i) {
      const Scalar x = uniform(rng, warp.region.x0, warp.region.x1);
      const Scalar y = uniform(rng, warp.region.y0, warp.region.y1);
      Scalar sx, sy, ox, oy;
      map.map(x, y, sx, sy);
      oracle.map(x, y, ox, oy);
      CHECK(std::abs(sx - ox) < 1e-6);
      CHECK(std::abs(sy - oy) < 1e-6);
    }
  }
}

TEST_CASE("duplicated control points raise a parameter error") {
  RegionBox box{0, 0, 32, 32};
  TpsWarp warp = TpsWarp::make_grid(box, Eigen::Matrix<Scalar, 9, 2>::Zero());
  warp.control_points.row(1) = warp.control_points.row(0);
  CHECK_THROWS_AS(TpsMap{warp}, ParameterError);
}

TEST_CASE("warp field is identity outside the region") {
  RegionBox box{10, 10, 30, 30};
  Eigen::Matrix<Scalar, 9, 2> disp;
  disp.setConstant(0.08);
  const WarpField field = solve_tps(TpsWarp::make_grid(box, disp), 48, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      if (box.contains(x, y)) continue;
      CHECK(field.sx(y, x) == static_cast<Scalar>(x));
      CHECK(field.sy(y, x) == static_cast<Scalar>(y));
    }
}

TEST_CASE("apply_warp identity and constant-plane invariance") {
  Rng rng = make_rng(14, "warp-apply");
  ImagePlane plane(48, 48, PlaneRole::Depth, RangeTag::Unit);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x)
      plane.chan(0)(y, x) = 0.5 + 0.4 * std::sin(0.2 * x) * std::cos(0.17 * y);

  RegionBox box{8, 8, 40, 40};
  const TpsWarp identity =
      TpsWarp::make_grid(box, Eigen::Matrix<Scalar, 9, 2>::Zero());
  CHECK(max_abs_diff(plane, apply_warp(plane, identity)) < 1e-6);

  const TpsWarp warp = random_warp(rng);
  ImagePlane constant(48, 48, PlaneRole::Depth, RangeTag::Unit, 0.42);
  CHECK(max_abs_diff(constant, apply_warp(constant, warp)) < 1e-12);
}

TEST_CASE("warp then inverse displacement approximately restores a smooth plane") {
  ImagePlane plane(64, 64, PlaneRole::Depth, RangeTag::Unit);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      plane.chan(0)(y, x) = 0.5 + 0.3 * std::sin(0.1 * x + 0.07 * y);

  Rng rng = make_rng(15, "warp-inverse");
  RegionBox box{12, 12, 52, 52};
  Eigen::Matrix<Scalar, 9, 2> disp;
  for (int i = 0; i < 9; ++i) {
    disp(i, 0) = uniform(rng, -0.05, 0.05);
    disp(i, 1) = uniform(rng, -0.05, 0.05);
  }
  const TpsWarp fwd = TpsWarp::make_grid(box, disp);
  const TpsWarp bwd = TpsWarp::make_grid(box, (-disp).eval());
  const ImagePlane round = apply_warp(apply_warp(plane, fwd), bwd);
  CHECK(max_abs_diff(plane, round) < 0.05);
}
