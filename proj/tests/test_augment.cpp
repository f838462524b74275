#include <doctest.h>

#include "anogen/augment.hpp"

using namespace anogen;

namespace {

ImagePlane noisy_plane(int h, int w, PlaneRole role, Rng& rng) {
  ImagePlane p(h, w, role, RangeTag::Unit);
  for (auto& ch : p.channels)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) ch(y, x) = uniform01(rng);
  return p;
}

SampleConditions toy_conditions(int res, Rng& rng) {
  SampleConditions s;
  s.conditions.color = noisy_plane(res, res, PlaneRole::Color, rng);
  s.conditions.depth = noisy_plane(res, res, PlaneRole::Depth, rng);
  s.conditions.edge = noisy_plane(res, res, PlaneRole::Edge, rng);
  return s;
}

}  // namespace

TEST_CASE("double horizontal flip is the identity") {
  Rng rng = make_rng(30, "flip");
  const ImagePlane p = noisy_plane(6, 9, PlaneRole::Color, rng);
  CHECK(max_abs_diff(p, flip(flip(p, true, false), true, false)) == 0.0);
}

TEST_CASE("flips commute") {
  Rng rng = make_rng(31, "flip-commute");
  const ImagePlane p = noisy_plane(5, 7, PlaneRole::Depth, rng);
  const ImagePlane a = flip(flip(p, true, false), false, true);
  const ImagePlane b = flip(flip(p, false, true), true, false);
  CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("flip moves a marked corner to the mirrored corner") {
  ImagePlane p(4, 6, PlaneRole::Depth, RangeTag::Unit, 0.0);
  p.chan(0)(0, 0) = 1.0;
  const ImagePlane h = flip(p, true, false);
  CHECK(h.chan(0)(0, 5) == 1.0);
  const ImagePlane v = flip(p, false, true);
  CHECK(v.chan(0)(3, 0) == 1.0);
}

TEST_CASE("resize_translate_pad identity at scale one") {
  Rng rng = make_rng(32, "rtp-id");
  const ImagePlane p = noisy_plane(10, 10, PlaneRole::Depth, rng);
  CHECK(max_abs_diff(p, resize_translate_pad(p, 1.0, 0, 0)) == 0.0);
}

TEST_CASE("resize_translate_pad area arithmetic at scale one half") {
  ImagePlane ones(16, 16, PlaneRole::Depth, RangeTag::Unit, 1.0);
  const ImagePlane out = resize_translate_pad(ones, 0.5, 0, 0, 0.0);
  const long count = (out.chan(0) == 1.0).count();
  CHECK(count == 64);  // exactly 25% of 256
  // padded area carries the pad value
  CHECK(out.chan(0)(0, 0) == 0.0);
  CHECK(out.chan(0)(15, 15) == 0.0);
}

TEST_CASE("resize_translate_pad validates scale and offsets") {
  ImagePlane p(12, 12, PlaneRole::Depth, RangeTag::Unit, 0.5);
  CHECK_THROWS_AS(resize_translate_pad(p, 0.4, 0, 0), ParameterError);
  CHECK_THROWS_AS(resize_translate_pad(p, 0.5, 9, 0), ParameterError);
}

TEST_CASE("default pad value is the border median") {
  ImagePlane p(12, 12, PlaneRole::Depth, RangeTag::Unit, 0.3);
  p.chan(0)(6, 6) = 0.9;
  const ImagePlane out = resize_translate_pad(p, 0.5, 0, 0);
  CHECK(out.chan(0)(0, 0) == doctest::Approx(0.3));
}

TEST_CASE("augmentation spec serialization round-trips and replays identically") {
  Rng rng = make_rng(33, "spec-roundtrip");
  AugmentationConfig config;
  const ImagePlane p = noisy_plane(48, 48, PlaneRole::Color, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const AugmentationSpec spec = sample_augmentation(rng, 48, 48, config);
    const AugmentationSpec back =
        AugmentationSpec::from_json(nlohmann::json::parse(spec.to_json().dump()));
    CHECK(spec == back);
    const ImagePlane a = apply_augmentation(p, spec);
    const ImagePlane b = apply_augmentation(p, back);
    CHECK(max_abs_diff(a, b) == 0.0);
  }
}

TEST_CASE("sample_training_pair is deterministic under a fixed seed") {
  Rng data_rng = make_rng(34, "pair-data");
  const SampleConditions sample = toy_conditions(32, data_rng);
  AugmentationConfig config;

  Rng rng_a = make_rng(35, "pair");
  Rng rng_b = make_rng(35, "pair");
  const TrainingPair a =
      sample_training_pair(sample, GenerationMode::RgbLevel, rng_a, config);
  const TrainingPair b =
      sample_training_pair(sample, GenerationMode::RgbLevel, rng_b, config);
  CHECK(max_abs_diff(a.input.color, b.input.color) == 0.0);
  CHECK(max_abs_diff(a.targets.at(DecoderGroup::AHD),
                     b.targets.at(DecoderGroup::AHD)) == 0.0);
  CHECK(a.paired.target_spec == b.paired.target_spec);
}

TEST_CASE("identity config gives pass-through pairs") {
  Rng data_rng = make_rng(36, "pair-id-data");
  const SampleConditions sample = toy_conditions(24, data_rng);
  AugmentationConfig config;
  config.identity = true;
  Rng rng = make_rng(37, "pair-id");
  const TrainingPair pair =
      sample_training_pair(sample, GenerationMode::RgbLevel, rng, config);
  CHECK(max_abs_diff(pair.input.color, sample.conditions.color) == 0.0);
  CHECK(max_abs_diff(pair.input.depth, sample.conditions.depth) == 0.0);
  CHECK(max_abs_diff(pair.targets.at(DecoderGroup::AHE),
                     sample.conditions.color) == 0.0);
}

TEST_CASE("recorded target spec replays onto raw planes to the emitted targets") {
  Rng data_rng = make_rng(38, "pair-replay-data");
  const SampleConditions sample = toy_conditions(40, data_rng);
  AugmentationConfig config;
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng = make_rng(39, "pair-replay", static_cast<std::uint64_t>(trial));
    const TrainingPair pair =
        sample_training_pair(sample, GenerationMode::RgbLevel, rng, config);
    const ImagePlane replayed =
        apply_augmentation(sample.conditions.color, pair.paired.target_spec);
    CHECK(max_abs_diff(replayed, pair.targets.at(DecoderGroup::AHD)) == 0.0);
    // target depth/edge conditions carry the same spec
    const ImagePlane depth_replay =
        apply_augmentation(sample.conditions.depth, pair.paired.target_spec);
    CHECK(max_abs_diff(depth_replay, pair.input.depth) == 0.0);
  }
}

TEST_CASE("depth mode swaps roles and uses real depth when present") {
  Rng data_rng = make_rng(40, "pair-depth-data");
  SampleConditions sample = toy_conditions(24, data_rng);
  AugmentationConfig config;
  config.identity = true;

  Rng rng = make_rng(41, "pair-depth");
  TrainingPair no_real =
      sample_training_pair(sample, GenerationMode::DepthLevel, rng, config);
  CHECK(no_real.pseudo_depth_fallback);
  CHECK(max_abs_diff(no_real.targets.at(DecoderGroup::AHD),
                     sample.conditions.depth) == 0.0);
  CHECK(max_abs_diff(no_real.targets.at(DecoderGroup::AHE),
                     sample.conditions.edge) == 0.0);

  sample.real_depth = noisy_plane(24, 24, PlaneRole::Depth, data_rng);
  Rng rng2 = make_rng(41, "pair-depth");
  TrainingPair with_real =
      sample_training_pair(sample, GenerationMode::DepthLevel, rng2, config);
  CHECK_FALSE(with_real.pseudo_depth_fallback);
  CHECK(max_abs_diff(with_real.targets.at(DecoderGroup::AHD),
                     *sample.real_depth) == 0.0);
}
