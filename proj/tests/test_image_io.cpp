#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "anogen/image_io.hpp"
#include "anogen/rng.hpp"

using namespace anogen;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "anogen-io-tests";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("png8 color round-trip within quantization") {
  Rng rng = make_rng(20, "png8");
  ImagePlane plane(9, 13, PlaneRole::Color, RangeTag::Unit);
  for (auto& ch : plane.channels)
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 13; ++x) ch(y, x) = uniform01(rng);
  const fs::path path = scratch_dir() / "color.png";
  save_png8(plane, path);
  const ImagePlane back = load_color_image(path);
  CHECK(back.height() == 9);
  CHECK(back.width() == 13);
  CHECK(max_abs_diff(plane, back) <= 0.5 / 255.0 + 1e-9);
}

TEST_CASE("png16 gray round-trip within quantization") {
  Rng rng = make_rng(21, "png16");
  ImagePlane plane(7, 5, PlaneRole::Depth, RangeTag::Unit);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 5; ++x) plane.chan(0)(y, x) = uniform01(rng);
  const fs::path path = scratch_dir() / "depth.png";
  save_png16_gray(plane, path);
  const ImagePlane back = load_gray_image(path, PlaneRole::Depth);
  CHECK(max_abs_diff(plane, back) <= 0.5 / 65535.0 + 1e-9);
}

TEST_CASE("png encoding is deterministic") {
  ImagePlane plane(6, 6, PlaneRole::Color, RangeTag::Unit, 0.25);
  plane.chan(1).setConstant(0.75);
  const fs::path a = scratch_dir() / "det_a.png";
  const fs::path b = scratch_dir() / "det_b.png";
  save_png8(plane, a);
  save_png8(plane, b);
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(fa)), {});
  const std::string bb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(ba == bb);
}

TEST_CASE("raw plane container is bit-exact") {
  Rng rng = make_rng(22, "raw-plane");
  ImagePlane plane(5, 4, PlaneRole::Edge, RangeTag::Unit);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 4; ++x) plane.chan(0)(y, x) = uniform01(rng);
  const fs::path path = scratch_dir() / "plane.bin";
  save_raw_plane(plane, path);
  const ImagePlane back = load_raw_plane(path);
  CHECK(back.role == PlaneRole::Edge);
  CHECK(back.range_tag == RangeTag::Unit);
  CHECK((back.chan(0) == plane.chan(0)).all());
}

TEST_CASE("loader errors on missing and malformed files") {
  CHECK_THROWS_AS(load_color_image(scratch_dir() / "missing.png"), IoError);
  const fs::path bogus = scratch_dir() / "bogus.png";
  std::ofstream(bogus) << "not a png";
  CHECK_THROWS_AS(load_color_image(bogus), IoError);
}
