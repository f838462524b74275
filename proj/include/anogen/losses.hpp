#pragma once

#include <map>

#include "anogen/network.hpp"

namespace anogen {

// Unit weights reproduce the combined objective; exposed for ablation.
struct LossWeights {
  Scalar perceptual_weight = 1.0;
  Scalar adversarial_weight = 1.0;

  void validate() const {
    if (perceptual_weight < 0 || adversarial_weight < 0)
      throw ConfigError("loss weights must be non-negative");
  }
};

// Fixed random convolutional stack standing in for a pretrained feature
// backbone. The perceptual formula is backbone-agnostic: a weighted sum
// of mean absolute feature differences at K tap points. Weights are
// seeded once and never trained.
class PerceptualBackbone {
 public:
  static constexpr int kTaps = 3;

  PerceptualBackbone(int in_channels, std::uint64_t seed);

  std::vector<nn::Var> features(const nn::Var& x) const;
  int in_channels() const { return in_channels_; }

 private:
  int in_channels_;
  std::vector<nn::Var> weights_, biases_;
  std::vector<nn::ConvSpec> specs_;
};

// Mean absolute feature difference averaged over taps (zero for equal
// inputs, symmetric in its arguments).
nn::Var perceptual_loss(const nn::Var& generated, const nn::Var& target,
                        const PerceptualBackbone& backbone);

// Discriminator objective: -mean log sigmoid(real) - mean log(1 -
// sigmoid(fake)), averaged over patches within a scale and then over
// scales.
nn::Var discriminator_loss(const std::vector<nn::Var>& real_logits,
                           const std::vector<nn::Var>& fake_logits);

// Non-saturating generator term: -mean log sigmoid(fake).
nn::Var generator_adversarial_loss(const std::vector<nn::Var>& fake_logits);

// Convenience evaluation of both adversarial scalars for given planes.
std::pair<Scalar, Scalar> adversarial_losses(const DiscriminatorModel& model,
                                             const nn::Var& conditions,
                                             const nn::Var& real_target,
                                             const nn::Var& generated);

// Sum over decoder groups of perceptual_weight * perceptual +
// adversarial_weight * generator-adversarial.
nn::Var total_generator_loss(
    const std::map<DecoderGroup, nn::Var>& perceptual_terms,
    const std::map<DecoderGroup, nn::Var>& adversarial_terms,
    const LossWeights& weights);

}  // namespace anogen
