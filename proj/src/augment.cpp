#include "anogen/augment.hpp"

#include <cmath>

namespace anogen {

using nlohmann::json;

namespace {

json region_to_json(const RegionBox& box) {
  return json{{"x0", box.x0}, {"y0", box.y0}, {"x1", box.x1}, {"y1", box.y1}};
}

RegionBox region_from_json(const json& j) {
  return RegionBox{j.at("x0").get<Scalar>(), j.at("y0").get<Scalar>(),
                   j.at("x1").get<Scalar>(), j.at("y1").get<Scalar>()};
}

json tps_to_json(const TpsWarp& warp) {
  json cp = json::array(), dp = json::array();
  for (int i = 0; i < TpsWarp::kPoints; ++i) {
    cp.push_back({warp.control_points(i, 0), warp.control_points(i, 1)});
    dp.push_back({warp.displacements(i, 0), warp.displacements(i, 1)});
  }
  return json{{"region", region_to_json(warp.region)},
              {"control_points", cp},
              {"displacements", dp},
              {"bound", warp.displacement_bound}};
}

TpsWarp tps_from_json(const json& j) {
  TpsWarp warp;
  warp.region = region_from_json(j.at("region"));
  warp.displacement_bound = j.at("bound").get<Scalar>();
  const auto& cp = j.at("control_points");
  const auto& dp = j.at("displacements");
  for (int i = 0; i < TpsWarp::kPoints; ++i) {
    warp.control_points(i, 0) = cp.at(i).at(0).get<Scalar>();
    warp.control_points(i, 1) = cp.at(i).at(1).get<Scalar>();
    warp.displacements(i, 0) = dp.at(i).at(0).get<Scalar>();
    warp.displacements(i, 1) = dp.at(i).at(1).get<Scalar>();
  }
  return warp;
}

}  // namespace

json AugmentationSpec::to_json() const {
  json j{{"flip_h", flips.horizontal},
         {"flip_v", flips.vertical},
         {"tps_feather", tps_feather},
         {"rng_seed", rng_seed}};
  if (rtp) {
    j["rtp"] = json{{"scale", rtp->scale}, {"dx", rtp->dx}, {"dy", rtp->dy}};
    if (rtp->pad_value) j["rtp"]["pad_value"] = *rtp->pad_value;
  }
  if (tps) j["tps"] = tps_to_json(*tps);
  return j;
}

AugmentationSpec AugmentationSpec::from_json(const json& j) {
  AugmentationSpec spec;
  spec.flips.horizontal = j.at("flip_h").get<bool>();
  spec.flips.vertical = j.at("flip_v").get<bool>();
  spec.tps_feather = j.at("tps_feather").get<Scalar>();
  spec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  if (j.contains("rtp")) {
    ResizeTranslatePad rtp;
    rtp.scale = j.at("rtp").at("scale").get<Scalar>();
    rtp.dx = j.at("rtp").at("dx").get<int>();
    rtp.dy = j.at("rtp").at("dy").get<int>();
    if (j.at("rtp").contains("pad_value"))
      rtp.pad_value = j.at("rtp").at("pad_value").get<Scalar>();
    spec.rtp = rtp;
  }
  if (j.contains("tps")) spec.tps = tps_from_json(j.at("tps"));
  return spec;
}

bool AugmentationSpec::operator==(const AugmentationSpec& other) const {
  return to_json() == other.to_json();
}

ImagePlane flip(const ImagePlane& plane, bool horizontal, bool vertical) {
  ImagePlane out = plane;
  for (auto& ch : out.channels) {
    if (horizontal) ch = ch.rowwise().reverse().eval();
    if (vertical) ch = ch.colwise().reverse().eval();
  }
  return out;
}

ImagePlane resize_translate_pad(const ImagePlane& plane, Scalar scale, int dx,
                                int dy, std::optional<Scalar> pad_value) {
  if (scale < 0.5 || scale > 1.0)
    throw ParameterError("resize_translate_pad scale must lie in [0.5, 1]");
  const int h = plane.height(), w = plane.width();
  const int sh = std::max(1, static_cast<int>(std::lround(h * scale)));
  const int sw = std::max(1, static_cast<int>(std::lround(w * scale)));
  const int top = (h - sh) / 2 + dy;
  const int left = (w - sw) / 2 + dx;
  if (top < 0 || left < 0 || top + sh > h || left + sw > w)
    throw ParameterError("resize_translate_pad offset pushes content outside frame");
  if (sh == h && sw == w && dx == 0 && dy == 0) return plane;

  const ImagePlane scaled = resize_bilinear(plane, sh, sw);
  ImagePlane out = plane;
  for (std::size_t c = 0; c < plane.channels.size(); ++c) {
    const Scalar pad = pad_value ? *pad_value : border_median(plane);
    out.channels[c].setConstant(pad);
    out.channels[c].block(top, left, sh, sw) = scaled.channels[c];
  }
  return out;
}

ImagePlane apply_augmentation(const ImagePlane& plane,
                              const AugmentationSpec& spec) {
  ImagePlane out = plane;
  if (spec.flips.horizontal || spec.flips.vertical)
    out = flip(out, spec.flips.horizontal, spec.flips.vertical);
  if (spec.rtp)
    out = resize_translate_pad(out, spec.rtp->scale, spec.rtp->dx, spec.rtp->dy,
                               spec.rtp->pad_value);
  if (spec.tps) out = apply_warp(out, *spec.tps, spec.tps_feather);
  return out;
}

AugmentationSpec sample_augmentation(Rng& rng, int height, int width,
                                     const AugmentationConfig& config) {
  AugmentationSpec spec;
  spec.tps_feather = config.tps_feather;
  if (config.identity) return spec;

  spec.flips.horizontal = uniform01(rng) < config.flip_probability;
  spec.flips.vertical = uniform01(rng) < config.flip_probability;

  if (uniform01(rng) < config.rtp_probability) {
    ResizeTranslatePad rtp;
    rtp.scale = uniform(rng, config.rtp_scale_min, config.rtp_scale_max);
    const int sh = std::max(1, static_cast<int>(std::lround(height * rtp.scale)));
    const int sw = std::max(1, static_cast<int>(std::lround(width * rtp.scale)));
    const int slack_y = (height - sh) / 2;
    const int slack_x = (width - sw) / 2;
    rtp.dy = slack_y > 0 ? uniform_int(rng, -slack_y, slack_y) : 0;
    rtp.dx = slack_x > 0 ? uniform_int(rng, -slack_x, slack_x) : 0;
    spec.rtp = rtp;
  }

  if (uniform01(rng) < config.tps_probability) {
    const Scalar fh = uniform(rng, config.tps_region_frac_min,
                              config.tps_region_frac_max);
    const Scalar fw = uniform(rng, config.tps_region_frac_min,
                              config.tps_region_frac_max);
    const Scalar rh = std::max(Scalar(8), fh * height);
    const Scalar rw = std::max(Scalar(8), fw * width);
    RegionBox box;
    box.y0 = uniform(rng, 0, std::max(Scalar(0), height - 1 - rh));
    box.x0 = uniform(rng, 0, std::max(Scalar(0), width - 1 - rw));
    box.y1 = std::min<Scalar>(height - 1, box.y0 + rh);
    box.x1 = std::min<Scalar>(width - 1, box.x0 + rw);
    Eigen::Matrix<Scalar, TpsWarp::kPoints, 2> disp;
    for (int i = 0; i < TpsWarp::kPoints; ++i) {
      disp(i, 0) = uniform(rng, -config.tps_displacement_bound,
                           config.tps_displacement_bound);
      disp(i, 1) = uniform(rng, -config.tps_displacement_bound,
                           config.tps_displacement_bound);
    }
    spec.tps = TpsWarp::make_grid(box, disp, 0.2, config.tps_displacement_bound);
  }
  return spec;
}

TrainingPair sample_training_pair(const SampleConditions& sample,
                                  GenerationMode mode, Rng& rng,
                                  const AugmentationConfig& config) {
  sample.conditions.validate();
  const int h = sample.conditions.height();
  const int w = sample.conditions.width();

  TrainingPair pair;
  const std::uint64_t in_seed = rng();
  const std::uint64_t tg_seed = rng();
  Rng in_rng(in_seed), tg_rng(tg_seed);
  pair.paired.input_spec = sample_augmentation(in_rng, h, w, config);
  pair.paired.input_spec.rng_seed = in_seed;
  pair.paired.target_spec = sample_augmentation(tg_rng, h, w, config);
  pair.paired.target_spec.rng_seed = tg_seed;

  const AugmentationSpec& in_spec = pair.paired.input_spec;
  const AugmentationSpec& tg_spec = pair.paired.target_spec;

  if (mode == GenerationMode::RgbLevel) {
    // Reference color under its own augmentation; target depth/edge and
    // the color supervision share the target augmentation.
    pair.input.color = apply_augmentation(sample.conditions.color, in_spec);
    pair.input.depth = apply_augmentation(sample.conditions.depth, tg_spec);
    pair.input.edge = apply_augmentation(sample.conditions.edge, tg_spec);
    ImagePlane target_color = apply_augmentation(sample.conditions.color, tg_spec);
    pair.targets[DecoderGroup::AHD] = target_color;
    pair.targets[DecoderGroup::AHE] = target_color;
  } else {
    // Depth-level: target color carries the target augmentation; the
    // reference depth/edge conditions carry the input augmentation, and
    // supervision is the target-augmented depth (AHD) / edge (AHE).
    ImagePlane depth = sample.conditions.depth;
    if (sample.real_depth) {
      depth = *sample.real_depth;
    } else {
      pair.pseudo_depth_fallback = true;
    }
    pair.input.color = apply_augmentation(sample.conditions.color, tg_spec);
    pair.input.depth = apply_augmentation(depth, in_spec);
    pair.input.edge = apply_augmentation(sample.conditions.edge, in_spec);
    pair.targets[DecoderGroup::AHD] = apply_augmentation(depth, tg_spec);
    pair.targets[DecoderGroup::AHE] =
        apply_augmentation(sample.conditions.edge, tg_spec);
  }
  return pair;
}

}  // namespace anogen
