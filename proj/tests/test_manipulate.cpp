#include <doctest.h>

#include "anogen/image_io.hpp"
#include "anogen/manipulate.hpp"

using namespace anogen;

namespace {

ConditionTriplet constant_triplet(int res, Scalar depth_v, Scalar edge_v) {
  ConditionTriplet t;
  t.color = ImagePlane(res, res, PlaneRole::Color, RangeTag::Unit, 0.5);
  t.depth = ImagePlane(res, res, PlaneRole::Depth, RangeTag::Unit, depth_v);
  t.edge = ImagePlane(res, res, PlaneRole::Edge, RangeTag::Unit, edge_v);
  return t;
}

ImagePlane block_region(int res, int y0, int x0, int size) {
  ImagePlane m(res, res, PlaneRole::Mask, RangeTag::Binary, 0.0);
  m.chan(0).block(y0, x0, size, size).setConstant(1.0);
  return m;
}

}  // namespace

TEST_CASE("sample_region respects tight area bounds") {
  Rng rng = make_rng(110, "region-area");
  const ImagePlane fg = full_foreground(64, 64);
  RegionBounds bounds{0.01, 0.01};
  const RegionSample r = sample_region(fg, fg, rng, bounds);
  const long area = (r.mask.chan(0) > 0.0).count();
  CHECK_FALSE(r.used_fallback);
  CHECK(area >= 0.009 * 64 * 64);
  CHECK(area <= 0.011 * 64 * 64);
}

TEST_CASE("sample_region is deterministic under a seed") {
  const ImagePlane fg = full_foreground(48, 48);
  Rng a = make_rng(111, "region-det");
  Rng b = make_rng(111, "region-det");
  const RegionSample ra = sample_region(fg, fg, a, {});
  const RegionSample rb = sample_region(fg, fg, b, {});
  CHECK((ra.mask.chan(0) == rb.mask.chan(0)).all());
}

TEST_CASE("disjoint foregrounds trigger the fallback path") {
  ImagePlane tfg(32, 32, PlaneRole::Mask, RangeTag::Binary, 0.0);
  ImagePlane rfg(32, 32, PlaneRole::Mask, RangeTag::Binary, 0.0);
  tfg.chan(0).block(0, 0, 8, 8).setConstant(1.0);
  rfg.chan(0).block(20, 20, 8, 8).setConstant(1.0);
  Rng rng = make_rng(112, "region-fallback");
  const RegionSample r = sample_region(tfg, rfg, rng, {});
  CHECK(r.used_fallback);
  CHECK((r.mask.chan(0) > 0.0).count() > 0);
}

TEST_CASE("manipulations are identity outside the region, exact rules inside") {
  const int res = 32;
  const ConditionTriplet target = constant_triplet(res, 0.2, 0.7);
  const ConditionTriplet reference = constant_triplet(res, 0.8, 0.1);
  const ImagePlane region = block_region(res, 8, 8, 10);

  SUBCASE("remove sets the border median inside") {
    ManipulationPlan plan;
    plan.kind = ManipulationKind::Remove;
    plan.region = region;
    const ConditionTriplet out = apply_manipulation(target, reference, plan);
    CHECK(out.depth.chan(0)(12, 12) == 0.2);  // border median of constant 0.2
    CHECK(out.depth.chan(0)(0, 0) == 0.2);
    // non-constant plane: border median distinct from interior
    ConditionTriplet t2 = target;
    t2.depth.chan(0).setConstant(0.6);
    t2.depth.chan(0).row(0).setConstant(0.05);
    t2.depth.chan(0).row(res - 1).setConstant(0.05);
    t2.depth.chan(0).col(0).setConstant(0.05);
    t2.depth.chan(0).col(res - 1).setConstant(0.05);
    const ConditionTriplet out2 = apply_manipulation(t2, reference, plan);
    CHECK(out2.depth.chan(0)(12, 12) == 0.05);
    CHECK(out2.depth.chan(0)(2, 2) == 0.6);  // untouched outside region
  }

  SUBCASE("replace copies reference values inside") {
    ManipulationPlan plan;
    plan.kind = ManipulationKind::Replace;
    plan.region = region;
    const ConditionTriplet out = apply_manipulation(target, reference, plan);
    CHECK(out.depth.chan(0)(12, 12) == 0.8);
    CHECK(out.edge.chan(0)(12, 12) == 0.1);
    CHECK(out.depth.chan(0)(0, 0) == 0.2);
    CHECK(out.edge.chan(0)(30, 30) == 0.7);
  }

  SUBCASE("merge blends with the closed-form rule") {
    ManipulationPlan plan;
    plan.kind = ManipulationKind::Merge;
    plan.merge_alpha = 0.5;
    plan.region = region;
    const ConditionTriplet out = apply_manipulation(target, reference, plan);
    const Scalar expected = (1 - 0.5) * 0.2 + 0.5 * 0.8;
    CHECK(out.depth.chan(0)(12, 12) == expected);
    CHECK(out.depth.chan(0)(0, 0) == 0.2);
  }

  SUBCASE("tps warps only inside the region") {
    ManipulationPlan plan;
    plan.kind = ManipulationKind::Tps;
    plan.region = region;
    Eigen::Matrix<Scalar, 9, 2> disp;
    disp.setConstant(0.08);
    plan.tps = TpsWarp::make_grid(RegionBox{6, 6, 20, 20}, disp);
    // gradient plane so the warp visibly moves values
    ConditionTriplet t = target;
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x)
        t.depth.chan(0)(y, x) = x / static_cast<Scalar>(res);
    const ConditionTriplet out = apply_manipulation(t, reference, plan);
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x)
        if (region.chan(0)(y, x) == 0.0)
          CHECK(out.depth.chan(0)(y, x) == t.depth.chan(0)(y, x));
    CHECK(max_abs_diff(out.depth, t.depth) > 1e-4);
  }

  SUBCASE("color is never modified") {
    for (ManipulationKind kind :
         {ManipulationKind::Merge, ManipulationKind::Remove,
          ManipulationKind::Replace}) {
      ManipulationPlan plan;
      plan.kind = kind;
      plan.region = region;
      const ConditionTriplet out = apply_manipulation(target, reference, plan);
      CHECK(max_abs_diff(out.color, target.color) == 0.0);
    }
  }
}

TEST_CASE("plan serialization replays to identical conditions") {
  Rng rng = make_rng(113, "plan-roundtrip");
  const ImagePlane fg = full_foreground(32, 32);
  ManipulationSettings settings;
  const ConditionTriplet target = constant_triplet(32, 0.3, 0.6);
  ConditionTriplet reference = constant_triplet(32, 0.9, 0.2);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      reference.depth.chan(0)(y, x) = uniform01(rng);

  for (int trial = 0; trial < 8; ++trial) {
    const ManipulationPlan plan = sample_plan(fg, fg, rng(), settings);
    const ManipulationPlan back =
        ManipulationPlan::from_json(nlohmann::json::parse(plan.to_json().dump()));
    CHECK((back.region.chan(0) == plan.region.chan(0)).all());
    const ConditionTriplet a = apply_manipulation(target, reference, plan);
    const ConditionTriplet b = apply_manipulation(target, reference, back);
    CHECK(max_abs_diff(a.depth, b.depth) == 0.0);
    CHECK(max_abs_diff(a.edge, b.edge) == 0.0);
  }
}

namespace {

Sample make_sample(const std::string& id, int res, std::uint64_t seed) {
  Rng rng = make_rng(seed, "manip-sample");
  Sample s;
  s.id = id;
  s.category = "widget";
  s.defect_label = "good";
  s.conditions.color = ImagePlane(res, res, PlaneRole::Color, RangeTag::Unit);
  for (auto& ch : s.conditions.color.channels)
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) ch(y, x) = uniform01(rng);
  s.conditions.depth = ImagePlane(res, res, PlaneRole::Depth, RangeTag::Unit, 0.4);
  s.conditions.edge = ImagePlane(res, res, PlaneRole::Edge, RangeTag::Unit, 0.1);
  return s;
}

}  // namespace

TEST_CASE("identity plan matches global generation; records are deterministic") {
  GeneratorConfig gc;
  gc.input_resolution = 32;
  gc.base_channels = 8;
  gc.resnet_blocks = 1;
  GeneratorModel model(gc, 21);
  const Sample target = make_sample("t", 32, 1);
  const Sample reference = make_sample("r", 32, 2);

  ManipulationPlan noop;
  noop.kind = ManipulationKind::Replace;
  noop.region = ImagePlane(32, 32, PlaneRole::Mask, RangeTag::Binary, 0.0);
  const AnomalyRecord local = generate_local_anomaly(
      model, target, reference, noop, DecoderGroup::AHD);
  const auto [global_ahd, global_ahe] = generate_global(model, target, reference);
  CHECK(max_abs_diff(local.generated, global_ahd.generated) == 0.0);
  CHECK((global_ahe.gt_mask.chan(0) == 1.0).all());  // full-foreground label

  // end-to-end determinism
  const AnomalyRecord again = generate_local_anomaly(
      model, target, reference, noop, DecoderGroup::AHD);
  CHECK(max_abs_diff(local.generated, again.generated) == 0.0);
}

TEST_CASE("gt mask of a local record equals the plan region exactly") {
  GeneratorConfig gc;
  gc.input_resolution = 32;
  gc.base_channels = 8;
  gc.resnet_blocks = 1;
  GeneratorModel model(gc, 22);
  ManipulationPlan plan;
  plan.kind = ManipulationKind::Remove;
  plan.region = block_region(32, 4, 4, 9);
  const AnomalyRecord rec = generate_local_anomaly(
      model, make_sample("t", 32, 3), make_sample("r", 32, 4), plan,
      DecoderGroup::AHE);
  CHECK((rec.gt_mask.chan(0) == plan.region.chan(0)).all());
  CHECK(rec.decoder == DecoderGroup::AHE);
}

TEST_CASE("generate_dataset writes the expected tree and replays exactly") {
  namespace fs = std::filesystem;
  const fs::path out = fs::temp_directory_path() / "anogen-gen-test";
  fs::remove_all(out);

  GeneratorConfig gc;
  gc.input_resolution = 32;
  gc.base_channels = 8;
  gc.resnet_blocks = 1;
  GeneratorModel model(gc, 23);

  std::vector<Sample> base;
  base.push_back(make_sample("widget/train/good/000", 32, 5));
  base.push_back(make_sample("widget/train/good/001", 32, 6));
  Sample defect = make_sample("widget/test/spot/000", 32, 7);
  defect.defect_label = "spot";
  base.push_back(defect);

  GenerateConfig config;
  config.count_per_decoder = 5;
  config.seed = 99;
  const GenerationManifest manifest = generate_dataset(model, base, config, out);

  // 2 defect labels x 2 decoders x 5 = 20 rows
  CHECK(manifest.rows.size() == 20);
  long files = 0;
  for (const auto& row : manifest.rows) {
    CHECK(fs::exists(out / row.image_path));
    CHECK(fs::exists(out / row.mask_path));
    ++files;
  }
  CHECK(files == 20);
  CHECK(fs::exists(out / "manifest.jsonl"));
  CHECK(fs::exists(out / "manifest.json"));

  // manifest replay regenerates byte-identical pixels
  const GenerationManifest loaded = load_manifest(out);
  REQUIRE(loaded.rows.size() == 20);
  const ManifestRow& row = loaded.rows[3];
  const AnomalyRecord replay = regenerate_row(model, base, row);
  const ImagePlane from_disk = load_color_image(out / row.image_path);
  // PNG quantizes to 8 bits; replay must match within half a code
  CHECK(max_abs_diff(convert_range(replay.generated, RangeTag::Unit),
                     from_disk) <= 0.5 / 255.0 + 1e-9);
}
