#include "anogen/losses.hpp"

namespace anogen {

using nn::Var;

PerceptualBackbone::PerceptualBackbone(int in_channels, std::uint64_t seed)
    : in_channels_(in_channels) {
  Rng rng = make_rng(seed, "perceptual-backbone",
                     static_cast<std::uint64_t>(in_channels));
  const int widths[kTaps] = {8, 16, 16};
  const int strides[kTaps] = {1, 2, 2};
  int prev = in_channels;
  for (int i = 0; i < kTaps; ++i) {
    const Scalar stddev = std::sqrt(2.0 / (prev * 9));
    weights_.push_back(
        nn::make_leaf(nn::normal_init(widths[i], prev, 3, 3, stddev, rng)));
    biases_.push_back(nn::make_leaf(nn::constant_init(1, widths[i], 1, 1, 0.0)));
    specs_.push_back({3, strides[i], 1});
    prev = widths[i];
  }
}

std::vector<Var> PerceptualBackbone::features(const Var& x) const {
  if (x->value.c != in_channels_)
    throw DimensionError("perceptual backbone channel mismatch");
  std::vector<Var> taps;
  Var y = x;
  for (int i = 0; i < kTaps; ++i) {
    y = nn::tanh(nn::conv2d(y, weights_[i], biases_[i], specs_[i]));
    taps.push_back(y);
  }
  return taps;
}

Var perceptual_loss(const Var& generated, const Var& target,
                    const PerceptualBackbone& backbone) {
  if (!generated->value.same_shape(target->value))
    throw DimensionError("perceptual_loss shape mismatch");
  const auto gen_feats = backbone.features(generated);
  const auto tgt_feats = backbone.features(target);
  std::vector<Var> terms;
  std::vector<Scalar> weights;
  for (std::size_t i = 0; i < gen_feats.size(); ++i) {
    terms.push_back(nn::mean_abs_diff(gen_feats[i], tgt_feats[i]));
    weights.push_back(1.0 / static_cast<Scalar>(gen_feats.size()));
  }
  return nn::add_scalars(terms, weights);
}

Var discriminator_loss(const std::vector<Var>& real_logits,
                       const std::vector<Var>& fake_logits) {
  if (real_logits.empty() || real_logits.size() != fake_logits.size())
    throw ParameterError("discriminator_loss needs matching logit grids");
  std::vector<Var> terms;
  std::vector<Scalar> weights;
  const Scalar per_scale = 1.0 / static_cast<Scalar>(real_logits.size());
  for (std::size_t s = 0; s < real_logits.size(); ++s) {
    terms.push_back(nn::mean_softplus(real_logits[s], -1.0));  // -log sig(r)
    terms.push_back(nn::mean_softplus(fake_logits[s], +1.0));  // -log(1-sig(f))
    weights.push_back(per_scale);
    weights.push_back(per_scale);
  }
  return nn::add_scalars(terms, weights);
}

Var generator_adversarial_loss(const std::vector<Var>& fake_logits) {
  if (fake_logits.empty())
    throw ParameterError("generator_adversarial_loss needs logit grids");
  std::vector<Var> terms;
  std::vector<Scalar> weights;
  const Scalar per_scale = 1.0 / static_cast<Scalar>(fake_logits.size());
  for (const auto& grid : fake_logits) {
    terms.push_back(nn::mean_softplus(grid, -1.0));
    weights.push_back(per_scale);
  }
  return nn::add_scalars(terms, weights);
}

std::pair<Scalar, Scalar> adversarial_losses(const DiscriminatorModel& model,
                                             const Var& conditions,
                                             const Var& real_target,
                                             const Var& generated) {
  const auto real = model.discriminate(conditions, real_target);
  const auto fake = model.discriminate(conditions, generated);
  const Scalar d = discriminator_loss(real, fake)->value.scalar();
  const Scalar g = generator_adversarial_loss(fake)->value.scalar();
  return {d, g};
}

Var total_generator_loss(const std::map<DecoderGroup, Var>& perceptual_terms,
                         const std::map<DecoderGroup, Var>& adversarial_terms,
                         const LossWeights& weights) {
  weights.validate();
  if (perceptual_terms.size() != 2 || adversarial_terms.size() != 2)
    throw InternalError("total_generator_loss expects both decoder groups");
  std::vector<Var> terms;
  std::vector<Scalar> w;
  for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
    terms.push_back(perceptual_terms.at(g));
    w.push_back(weights.perceptual_weight);
    terms.push_back(adversarial_terms.at(g));
    w.push_back(weights.adversarial_weight);
  }
  return nn::add_scalars(terms, w);
}

}  // namespace anogen
