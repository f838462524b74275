#pragma once

#include <nlohmann/json.hpp>
#include <map>
#include <optional>

#include "anogen/rng.hpp"
#include "anogen/tps.hpp"
#include "anogen/triplet.hpp"

namespace anogen {

// Resize-translation-padding: content scaled by `scale`, placed centered
// plus an integer pixel offset, remainder filled with the pad value.
// When pad_value is unset the per-plane border median is used.
struct ResizeTranslatePad {
  Scalar scale = 1.0;
  int dx = 0, dy = 0;
  std::optional<Scalar> pad_value;
};

struct FlipSpec {
  bool horizontal = false;
  bool vertical = false;
};

// Fully serialized description of one augmentation draw. Replaying a
// spec reproduces the transform pixel-exactly. Application order:
// flips, then resize-translation-padding, then local TPS.
struct AugmentationSpec {
  FlipSpec flips;
  std::optional<ResizeTranslatePad> rtp;
  std::optional<TpsWarp> tps;
  Scalar tps_feather = 4.0;
  std::uint64_t rng_seed = 0;

  nlohmann::json to_json() const;
  static AugmentationSpec from_json(const nlohmann::json& j);
  bool operator==(const AugmentationSpec& other) const;
};

// Input-side and target-side specs of one training pair. The target
// spec is applied identically to target conditions and to supervision
// targets.
struct PairedAugmentation {
  AugmentationSpec input_spec;
  AugmentationSpec target_spec;
};

ImagePlane flip(const ImagePlane& plane, bool horizontal, bool vertical);

ImagePlane resize_translate_pad(const ImagePlane& plane, Scalar scale, int dx,
                                int dy, std::optional<Scalar> pad_value = {});

ImagePlane apply_augmentation(const ImagePlane& plane,
                              const AugmentationSpec& spec);

// Knobs for the augmentation sampler. The paper leaves the TPS
// displacement distribution and the local-region sampler open; both are
// exposed here.
struct AugmentationConfig {
  Scalar tps_probability = 0.99;
  Scalar tps_displacement_bound = 0.1;
  Scalar tps_region_frac_min = 0.2;
  Scalar tps_region_frac_max = 0.6;
  Scalar tps_feather = 4.0;
  Scalar rtp_probability = 0.5;
  Scalar rtp_scale_min = 0.7;
  Scalar rtp_scale_max = 1.0;
  Scalar flip_probability = 0.5;
  bool identity = false;  // force no-op specs (debug / tests)
};

AugmentationSpec sample_augmentation(Rng& rng, int height, int width,
                                     const AugmentationConfig& config);

// One training pair per Fig-style workflow: the generator input triplet
// carries the reference plane under input_spec and the target structure
// planes under target_spec; supervision planes per decoder group carry
// target_spec.
struct TrainingPair {
  ConditionTriplet input;                    // unit range
  std::map<DecoderGroup, ImagePlane> targets;  // unit range supervision
  PairedAugmentation paired;
  bool pseudo_depth_fallback = false;
};

struct SampleConditions {
  ConditionTriplet conditions;
  std::optional<ImagePlane> real_depth;
};

TrainingPair sample_training_pair(const SampleConditions& sample,
                                  GenerationMode mode, Rng& rng,
                                  const AugmentationConfig& config);

}  // namespace anogen
