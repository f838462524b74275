#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "anogen/dataset.hpp"
#include "anogen/image_io.hpp"
#include "anogen/toy_data.hpp"

using namespace anogen;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "anogen-ingest" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_color(const fs::path& path, Scalar value, int res = 16) {
  fs::create_directories(path.parent_path());
  save_png8(ImagePlane(res, res, PlaneRole::Color, RangeTag::Unit, value), path);
}

}  // namespace

TEST_CASE("scan counts a small mvtec-style fixture") {
  const fs::path root = fresh_dir("mvtec_small");
  write_color(root / "cat" / "train" / "good" / "000.png", 0.2);
  write_color(root / "cat" / "train" / "good" / "001.png", 0.3);
  write_color(root / "cat" / "test" / "crack" / "000.png", 0.4);
  fs::create_directories(root / "cat" / "ground_truth" / "crack");
  save_png8(ImagePlane(16, 16, PlaneRole::Mask, RangeTag::Binary, 1.0),
            root / "cat" / "ground_truth" / "crack" / "000_mask.png");

  const DatasetIndex index = scan(root, DatasetKind::MvtecLayout);
  REQUIRE(index.categories.size() == 1);
  CHECK(index.categories[0].name == "cat");
  CHECK(index.categories[0].train.size() == 2);
  CHECK(index.categories[0].test.size() == 1);
  CHECK(index.categories[0].test[0].defect_label == "crack");
  CHECK(index.categories[0].test[0].gt_mask_path.has_value());
}

TEST_CASE("scan of an empty directory yields zero categories") {
  const fs::path root = fresh_dir("empty");
  const DatasetIndex index = scan(root, DatasetKind::MvtecLayout);
  CHECK(index.categories.empty());
  CHECK_THROWS_AS(scan(root / "missing", DatasetKind::MvtecLayout), IoError);
}

TEST_CASE("scan is order-deterministic") {
  const fs::path root = fresh_dir("order");
  for (const char* stem : {"b", "a", "c"})
    write_color(root / "cat" / "train" / "good" / (std::string(stem) + ".png"),
                0.5);
  const DatasetIndex i1 = scan(root, DatasetKind::MvtecLayout);
  const DatasetIndex i2 = scan(root, DatasetKind::MvtecLayout);
  REQUIRE(i1.categories[0].train.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(i1.categories[0].train[i].id == i2.categories[0].train[i].id);
  CHECK(i1.categories[0].train[0].id < i1.categories[0].train[1].id);
}

TEST_CASE("rgbd layout picks up depth siblings") {
  const fs::path root = fresh_dir("rgbd");
  write_color(root / "cat" / "train" / "good" / "000.png", 0.2);
  save_png16_gray(ImagePlane(16, 16, PlaneRole::Depth, RangeTag::Unit, 0.6),
                  root / "cat" / "train" / "good" / "000_depth.png");
  const DatasetIndex index = scan(root, DatasetKind::RgbdLayout);
  REQUIRE(index.categories[0].train.size() == 1);
  CHECK(index.categories[0].train[0].depth_path.has_value());

  SampleLoader loader(make_conditioning_backend("fallback"), {16, {}});
  const Sample s = loader.load(index.categories[0].train[0], "cat");
  REQUIRE(s.real_depth.has_value());
  CHECK(s.real_depth->chan(0)(8, 8) == doctest::Approx(0.6).epsilon(1e-3));
}

TEST_CASE("flat class layout lists one category with class labels") {
  const fs::path root = fresh_dir("flat");
  write_toy_flat_dataset(root, ToyFlatSpec{2, 24, 9});
  const DatasetIndex index = scan(root, DatasetKind::FlatClassLayout);
  REQUIRE(index.categories.size() == 1);
  CHECK(index.categories[0].train.size() == 6);
  std::set<std::string> labels;
  for (const auto& e : index.categories[0].train) labels.insert(e.defect_label);
  CHECK(labels == std::set<std::string>{"cross", "ring", "ring_cross"});
}

TEST_CASE("split_base_set partitions per defect with ceil(fraction*n)") {
  const fs::path root = fresh_dir("split9");
  for (int i = 0; i < 9; ++i)
    write_color(root / "cat" / "test" / "crack" /
                    (std::string("00") + std::to_string(i) + ".png"),
                0.1 * i / 2);
  const DatasetIndex index = scan(root, DatasetKind::MvtecLayout);
  auto [base, held] = split_base_set(index, 1.0 / 3.0, 42);
  CHECK(base.categories[0].test.size() == 3);
  CHECK(held.categories[0].test.size() == 6);

  // disjoint union equals the input
  std::set<std::string> ids;
  for (const auto& e : base.categories[0].test) ids.insert(e.id);
  for (const auto& e : held.categories[0].test) {
    CHECK(ids.count(e.id) == 0);
    ids.insert(e.id);
  }
  CHECK(ids.size() == 9);
}

TEST_CASE("split fraction 0.5 of two samples gives one each") {
  const fs::path root = fresh_dir("split2");
  write_color(root / "cat" / "train" / "good" / "000.png", 0.2);
  write_color(root / "cat" / "train" / "good" / "001.png", 0.3);
  const DatasetIndex index = scan(root, DatasetKind::MvtecLayout);
  auto [base, held] = split_base_set(index, 0.5, 7);
  CHECK(base.categories[0].train.size() == 1);
  CHECK(held.categories[0].train.size() == 1);
}

TEST_CASE("split is deterministic and a single sample goes to base") {
  const fs::path root = fresh_dir("split1");
  write_color(root / "cat" / "test" / "dent" / "only.png", 0.4);
  const DatasetIndex index = scan(root, DatasetKind::MvtecLayout);
  auto [base, held] = split_base_set(index, 0.333, 7);
  CHECK(base.categories[0].test.size() == 1);
  CHECK(held.categories[0].test.empty());

  auto [base2, held2] = split_base_set(index, 0.333, 7);
  CHECK(base.categories[0].test[0].id == base2.categories[0].test[0].id);
}

TEST_CASE("loader resizes to the working resolution") {
  const fs::path root = fresh_dir("resize");
  write_color(root / "cat" / "train" / "good" / "000.png", 0.5, 32);
  const DatasetIndex index = scan(root, DatasetKind::MvtecLayout);
  SampleLoader loader(make_conditioning_backend("fallback"), {16, {}});
  const Sample s = loader.load(index.categories[0].train[0], "cat");
  CHECK(s.conditions.color.height() == 16);
  CHECK(s.conditions.depth.height() == 16);
  CHECK(s.conditions.edge.width() == 16);
}

TEST_CASE("condition cache: warm hits skip the extractor and match exactly") {
  const fs::path root = fresh_dir("cache");
  const fs::path cache = root / "_cache";
  write_color(root / "cat" / "train" / "good" / "000.png", 0.0, 24);
  {
    ImagePlane img(24, 24, PlaneRole::Color, RangeTag::Unit);
    Rng rng = make_rng(60, "cache-img");
    for (auto& ch : img.channels)
      for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) ch(y, x) = uniform01(rng);
    save_png8(img, root / "cat" / "train" / "good" / "000.png");
  }
  const DatasetIndex index = scan(root, DatasetKind::MvtecLayout);

  auto backend = make_conditioning_backend("fallback");
  auto* edge = dynamic_cast<GradientEdgeExtractor*>(backend.edge.get());
  auto* depth = dynamic_cast<LuminanceDepthEstimator*>(backend.depth.get());
  REQUIRE(edge != nullptr);

  SampleLoader loader(backend, {24, cache});
  const Sample cold = loader.load(index.categories[0].train[0], "cat");
  CHECK(edge->invocations() == 1);
  CHECK(depth->invocations() == 1);

  SampleLoader warm_loader(backend, {24, cache});
  const Sample warm = warm_loader.load(index.categories[0].train[0], "cat");
  CHECK(edge->invocations() == 1);  // zero extra invocations
  CHECK(depth->invocations() == 1);
  CHECK((warm.conditions.edge.chan(0) == cold.conditions.edge.chan(0)).all());
  CHECK((warm.conditions.depth.chan(0) == cold.conditions.depth.chan(0)).all());

  // version bump invalidates the cache
  ConditioningBackend bumped;
  bumped.edge = std::make_shared<GradientEdgeExtractor>(2.0);
  bumped.depth = backend.depth;
  auto* edge2 = dynamic_cast<GradientEdgeExtractor*>(bumped.edge.get());
  SampleLoader bumped_loader(bumped, {24, cache});
  bumped_loader.load(index.categories[0].train[0], "cat");
  CHECK(edge2->invocations() == 1);  // re-invoked under the new version
}

TEST_CASE("loader skips unreadable samples with a logged error") {
  const fs::path root = fresh_dir("unreadable");
  write_color(root / "cat" / "train" / "good" / "000.png", 0.5);
  std::ofstream(root / "cat" / "train" / "good" / "001.png") << "garbage";
  const DatasetIndex index = scan(root, DatasetKind::MvtecLayout);
  SampleLoader loader(make_conditioning_backend("fallback"), {16, {}});
  const auto samples = loader.load_all(index);
  CHECK(samples.size() == 1);
}
