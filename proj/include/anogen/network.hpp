#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>

#include "anogen/nn/autodiff.hpp"
#include "anogen/triplet.hpp"

namespace anogen {

struct GeneratorConfig {
  int input_resolution = 256;
  int scales = 4;  // fixed: features at R, R/2, R/4, R/8
  int base_channels = 64;
  int resnet_blocks = 4;
  GenerationMode mode = GenerationMode::RgbLevel;

  int output_channels() const { return anogen::output_channels(mode); }
  // base * 2^k, capped at 8 * base.
  int channels_at(int scale) const;
  void validate() const;

  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

struct DiscriminatorConfig {
  int num_scales = 2;
  int base_channels = 64;

  nlohmann::json to_json() const;
  static DiscriminatorConfig from_json(const nlohmann::json& j);
};

// Multi-scale features from the shared encoder, finest first.
using FeaturePyramid = std::vector<nn::Var>;

// Raw decoder outputs for one group (batch tensors, generator range).
struct DecodedBatch {
  nn::Var texture;  // tanh-squashed, [-1, 1]
  nn::Var mask;     // sigmoid-squashed, [0, 1]
  nn::Var fused;    // fuse(content, texture, mask)
};

// Shared encoder plus the AHD and AHE decoder groups, each with a
// texture branch and a mask branch. The two groups share architecture
// but never parameters.
class GeneratorModel {
 public:
  GeneratorModel(const GeneratorConfig& config, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  // Multi-scale features of the 5-channel condition tensor
  // [color(3), depth(1), edge(1)].
  FeaturePyramid encode(const nn::Var& conditions) const;

  // content: reference tensor matching the output channel count.
  DecodedBatch decode(const FeaturePyramid& features, DecoderGroup group,
                      const nn::Var& content) const;

  std::size_t group_param_count(DecoderGroup group) const;

  // Swaps the texture-branch output heads for a fresh 1-channel head;
  // everything else (encoder, trunks, mask branches) keeps its values.
  void reshape_output_head(GenerationMode new_mode, std::uint64_t seed);

 private:
  GeneratorConfig config_;
  nn::ParamSet params_;
};

class DiscriminatorModel {
 public:
  DiscriminatorModel(const DiscriminatorConfig& config, int condition_channels,
                     int candidate_channels, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return config_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  int candidate_channels() const { return candidate_channels_; }

  // One patch-logit grid per scale.
  std::vector<nn::Var> discriminate(const nn::Var& conditions,
                                    const nn::Var& candidate) const;

 private:
  DiscriminatorConfig config_;
  int condition_channels_;
  int candidate_channels_;
  nn::ParamSet params_;
};

// ---- plane <-> tensor bridging (signed range at the network boundary) ----

nn::Tensor triplet_to_tensor(const ConditionTriplet& triplet);
nn::Tensor planes_to_tensor(const std::vector<const ImagePlane*>& planes);
ImagePlane tensor_to_plane(const nn::Tensor& tensor, int sample,
                           PlaneRole role, RangeTag tag);

// Full generator pass on one triplet; content defaults to the triplet's
// color (RGB mode) or depth/edge plane (depth mode) per group.
GenerationResult run_generator(const GeneratorModel& model,
                               const ConditionTriplet& conditions,
                               DecoderGroup group);

// ---- checkpoints ----

struct Checkpoint {
  GeneratorConfig generator_config;
  DiscriminatorConfig discriminator_config;
  nlohmann::json extra;  // counters, rng streams, optimizer metadata
  std::map<std::string, nn::Tensor> blobs;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void store_params(Checkpoint& ckpt, const std::string& prefix,
                  const nn::ParamSet& params);
void restore_params(const Checkpoint& ckpt, const std::string& prefix,
                    nn::ParamSet& params);

}  // namespace anogen
