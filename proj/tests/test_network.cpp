#include <doctest.h>

#include <filesystem>
#include <map>

#include "anogen/network.hpp"
#include "anogen/training.hpp"

using namespace anogen;

namespace {

GeneratorConfig desk_config(int res = 64, int base = 8,
                            GenerationMode mode = GenerationMode::RgbLevel) {
  GeneratorConfig c;
  c.input_resolution = res;
  c.base_channels = base;
  c.resnet_blocks = 1;
  c.mode = mode;
  return c;
}

nn::Tensor random_conditions(int n, int res, Rng& rng) {
  nn::Tensor t(n, 5, res, res);
  for (int i = 0; i < t.data.rows(); ++i)
    for (int j = 0; j < t.data.cols(); ++j)
      t.data(i, j) = 2.0 * uniform01(rng) - 1.0;
  return t;
}

ConditionTriplet random_triplet(int res, Rng& rng) {
  ConditionTriplet t;
  t.color = ImagePlane(res, res, PlaneRole::Color, RangeTag::Unit);
  t.depth = ImagePlane(res, res, PlaneRole::Depth, RangeTag::Unit);
  t.edge = ImagePlane(res, res, PlaneRole::Edge, RangeTag::Unit);
  for (ImagePlane* p : {&t.color, &t.depth, &t.edge})
    for (auto& ch : p->channels)
      for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) ch(y, x) = uniform01(rng);
  return t;
}

}  // namespace

TEST_CASE("channel growth rule: base * 2^k capped at 8x") {
  GeneratorConfig c;
  c.base_channels = 64;
  CHECK(c.channels_at(0) == 64);
  CHECK(c.channels_at(1) == 128);
  CHECK(c.channels_at(2) == 256);
  CHECK(c.channels_at(3) == 512);
  CHECK(c.channels_at(4) == 512);  // capped
}

TEST_CASE("config validation") {
  GeneratorConfig c = desk_config(60);  // not divisible by 8
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(desk_config(64).validate());
}

TEST_CASE("encode produces a halving pyramid") {
  Rng rng = make_rng(80, "enc");
  GeneratorModel model(desk_config(64, 8), 1);
  nn::Var input = nn::make_leaf(random_conditions(2, 64, rng));
  const FeaturePyramid feats = model.encode(input);
  REQUIRE(feats.size() == 4);
  const int expected_h[4] = {64, 32, 16, 8};
  const int expected_c[4] = {8, 16, 32, 64};
  for (int s = 0; s < 4; ++s) {
    CHECK(feats[static_cast<std::size_t>(s)]->value.h == expected_h[s]);
    CHECK(feats[static_cast<std::size_t>(s)]->value.c == expected_c[s]);
    CHECK(feats[static_cast<std::size_t>(s)]->value.n == 2);  // batch dim
  }
  CHECK_THROWS_AS(model.encode(nn::make_leaf(random_conditions(1, 32, rng))),
                  DimensionError);
}

TEST_CASE("decode emits bounded mask and texture with the right shape") {
  Rng rng = make_rng(81, "dec");
  GeneratorModel model(desk_config(32, 8), 2);
  nn::Var input = nn::make_leaf(random_conditions(2, 32, rng));
  const FeaturePyramid feats = model.encode(input);
  nn::Tensor content(2, 3, 32, 32);
  nn::Var content_var = nn::make_leaf(content);

  for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
    const DecodedBatch out = model.decode(feats, g, content_var);
    CHECK(out.texture->value.c == 3);
    CHECK(out.texture->value.h == 32);
    CHECK(out.mask->value.c == 1);
    CHECK((out.mask->value.data.array() >= 0.0).all());
    CHECK((out.mask->value.data.array() <= 1.0).all());
    CHECK((out.texture->value.data.array() >= -1.0).all());
    CHECK((out.texture->value.data.array() <= 1.0).all());
  }
}

TEST_CASE("decoder groups have identical parameter counts") {
  GeneratorModel model(desk_config(32, 8), 3);
  CHECK(model.group_param_count(DecoderGroup::AHD) ==
        model.group_param_count(DecoderGroup::AHE));
  CHECK(model.group_param_count(DecoderGroup::AHD) > 0);
}

TEST_CASE("mask bias forced very negative makes fused equal content") {
  Rng rng = make_rng(82, "mask-neg");
  GeneratorModel model(desk_config(32, 8), 4);
  for (const char* name : {"ahd.mask.head.b", "ahe.mask.head.b"})
    model.params().find(name)->value.data.setConstant(-20.0);

  const ConditionTriplet triplet = random_triplet(32, rng);
  const GenerationResult result =
      run_generator(model, triplet, DecoderGroup::AHD);
  const ImagePlane content = convert_range(triplet.color, RangeTag::Signed);
  CHECK(max_abs_diff(result.fused, content) < 1e-3);
}

TEST_CASE("run_generator satisfies the fusion invariant bit-for-bit") {
  Rng rng = make_rng(83, "fuse-invariant");
  GeneratorModel model(desk_config(32, 8), 5);
  const ConditionTriplet triplet = random_triplet(32, rng);
  for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
    const GenerationResult r = run_generator(model, triplet, g);
    CHECK((r.fusion_map.chan(0) >= 0.0).all());
    CHECK((r.fusion_map.chan(0) <= 1.0).all());
    const ImagePlane content = convert_range(triplet.color, RangeTag::Signed);
    const ImagePlane refused = fuse(content, r.anomaly_source, r.fusion_map);
    CHECK(max_abs_diff(refused, r.fused) == 0.0);
  }
}

TEST_CASE("depth mode decodes one channel against depth/edge content") {
  Rng rng = make_rng(84, "depth-mode");
  GeneratorModel model(desk_config(32, 8, GenerationMode::DepthLevel), 6);
  const ConditionTriplet triplet = random_triplet(32, rng);
  const GenerationResult r = run_generator(model, triplet, DecoderGroup::AHD);
  CHECK(r.fused.channel_count() == 1);
  CHECK(r.anomaly_source.role == PlaneRole::Depth);
}

TEST_CASE("discriminator grid sizes follow the stride plan") {
  Rng rng = make_rng(85, "disc");
  DiscriminatorConfig dc;
  dc.num_scales = 2;
  dc.base_channels = 8;
  DiscriminatorModel disc(dc, 5, 3, 7);
  nn::Var cond = nn::make_leaf(random_conditions(2, 64, rng));
  nn::Tensor cand(2, 3, 64, 64);
  nn::Var cand_var = nn::make_leaf(cand);
  const auto grids = disc.discriminate(cond, cand_var);
  REQUIRE(grids.size() == 2);
  CHECK(grids[0]->value.h == 8);
  CHECK(grids[0]->value.w == 8);
  CHECK(grids[1]->value.h == 4);
  CHECK(grids[1]->value.w == 4);
  CHECK(grids[0]->value.n == 2);

  // eval determinism
  const auto again = disc.discriminate(cond, cand_var);
  CHECK(grids[0]->value.data == again[0]->value.data);

  nn::Tensor wrong(2, 1, 64, 64);
  CHECK_THROWS_AS(disc.discriminate(cond, nn::make_leaf(wrong)),
                  DimensionError);
}

TEST_CASE("checkpoint round-trips parameters exactly") {
  namespace fs = std::filesystem;
  GeneratorModel model(desk_config(32, 8), 8);
  DiscriminatorConfig dc;
  dc.base_channels = 8;
  DiscriminatorModel disc(dc, 5, 3, 9);

  Checkpoint ckpt;
  ckpt.generator_config = model.config();
  ckpt.discriminator_config = dc;
  ckpt.extra = {{"step", 12}};
  store_params(ckpt, "g.", model.params());
  store_params(ckpt, "d.", disc.params());

  const fs::path path = fs::temp_directory_path() / "anogen-ckpt-test.bin";
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.extra.at("step") == 12);
  CHECK(back.generator_config.base_channels == 8);

  GeneratorModel restored(back.generator_config, 999);
  restore_params(back, "g.", restored.params());
  for (const auto& e : model.params().entries()) {
    const auto other = restored.params().find(e.name);
    CHECK(other->value.data == e.var->value.data);
  }
}

TEST_CASE("loading an RGB checkpoint as depth-level errors") {
  GeneratorModel model(desk_config(32, 8), 10);
  Checkpoint ckpt;
  ckpt.generator_config = model.config();
  store_params(ckpt, "g.", model.params());
  CHECK_THROWS_AS(generator_from_checkpoint(ckpt, GenerationMode::DepthLevel),
                  ConfigError);
  CHECK_NOTHROW(generator_from_checkpoint(ckpt, GenerationMode::RgbLevel));
}

TEST_CASE("reshape_output_head keeps everything but the texture heads") {
  GeneratorModel model(desk_config(32, 8), 11);
  std::map<std::string, nn::Tensor::Matrix> before;
  for (const auto& e : model.params().entries())
    before[e.name] = e.var->value.data;

  model.reshape_output_head(GenerationMode::DepthLevel, 12);
  CHECK(model.config().mode == GenerationMode::DepthLevel);
  for (const auto& e : model.params().entries()) {
    const bool is_texture_head =
        e.name.find(".texture.head.") != std::string::npos;
    if (is_texture_head) {
      CHECK(e.var->value.n == 1);  // one output channel now
    } else {
      CHECK(e.var->value.data == before.at(e.name));
    }
  }
}
