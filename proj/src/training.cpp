#include "anogen/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

namespace anogen {

using nn::Var;

void TrainSchedule::validate() const {
  if (epochs < 1 || batch_size < 1)
    throw ConfigError("schedule needs epochs >= 1 and batch_size >= 1");
  if (learning_rate <= 0) throw ConfigError("learning rate must be positive");
  if (decay_start_fraction < 0 || decay_start_fraction >= 1)
    throw ConfigError("decay_start_fraction must lie in [0,1)");
  if (max_steps && *max_steps < 1) throw ConfigError("max_steps must be >= 1");
}

Scalar lr_at(const TrainSchedule& schedule, Scalar epoch) {
  const Scalar start = schedule.decay_start_fraction * schedule.epochs;
  if (epoch <= start) return schedule.learning_rate;
  const Scalar span = static_cast<Scalar>(schedule.epochs) - start;
  const Scalar remaining = (static_cast<Scalar>(schedule.epochs) - epoch) / span;
  return schedule.learning_rate * std::max(Scalar(0), remaining);
}

Trainer::Trainer(std::vector<TrainItem> data, TrainerOptions options)
    : data_(std::move(data)), options_(std::move(options)) {
  if (data_.empty()) throw InputError("trainer needs a nonempty dataset");
  options_.schedule.validate();
  options_.weights.validate();
  options_.generator.validate();

  steps_per_epoch_ = static_cast<long>(
      (data_.size() + options_.schedule.batch_size - 1) /
      options_.schedule.batch_size);

  generator_ = std::make_unique<GeneratorModel>(
      options_.generator, derive_seed(options_.seed, "generator"));
  const int out_ch = options_.generator.output_channels();
  discriminator_ = std::make_unique<DiscriminatorModel>(
      options_.discriminator, 5, out_ch, derive_seed(options_.seed, "discriminator"));
  perceptual_ = std::make_unique<PerceptualBackbone>(
      out_ch, derive_seed(options_.seed, "perceptual"));
}

int Trainer::epoch() const {
  return static_cast<int>(step_ / steps_per_epoch_);
}

Scalar Trainer::current_lr() const {
  return lr_at(options_.schedule, static_cast<Scalar>(epoch()));
}

std::vector<std::size_t> Trainer::batch_for_step(long step) const {
  const long ep = step / steps_per_epoch_;
  const long pos = step % steps_per_epoch_;
  std::vector<std::size_t> order(data_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = make_rng(options_.seed, "epoch-order", static_cast<std::uint64_t>(ep));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t begin =
      static_cast<std::size_t>(pos) * options_.schedule.batch_size;
  const std::size_t end =
      std::min(order.size(), begin + options_.schedule.batch_size);
  return {order.begin() + static_cast<std::ptrdiff_t>(begin),
          order.begin() + static_cast<std::ptrdiff_t>(end)};
}

StepLosses Trainer::step() {
  const GenerationMode mode = options_.generator.mode;
  const int res = options_.generator.input_resolution;
  const int out_ch = options_.generator.output_channels();
  const auto batch = batch_for_step(step_);
  const int nb = static_cast<int>(batch.size());

  StepLosses losses;
  losses.step = step_;
  losses.epoch = epoch();

  // Assemble batch tensors from per-sample training pairs.
  nn::Tensor input(nb, 5, res, res);
  std::map<DecoderGroup, nn::Tensor> content, target;
  for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
    content[g] = nn::Tensor(nb, out_ch, res, res);
    target[g] = nn::Tensor(nb, out_ch, res, res);
  }
  for (int i = 0; i < nb; ++i) {
    const TrainItem& item = data_[batch[static_cast<std::size_t>(i)]];
    losses.batch_ids.push_back(item.id);
    Rng pair_rng = make_rng(options_.seed, "pair/" + item.id,
                            static_cast<std::uint64_t>(step_));
    TrainingPair pair =
        sample_training_pair(item.data, mode, pair_rng, options_.augment);
    const nn::Tensor in = triplet_to_tensor(pair.input);
    input.sample(i) = in.sample(0);
    for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
      const nn::Tensor tg = planes_to_tensor({&pair.targets.at(g)});
      target[g].sample(i) = tg.sample(0);
      if (mode == GenerationMode::RgbLevel) {
        content[g].sample(i) = in.sample(0).topRows(3);
      } else {
        content[g].sample(i) =
            in.sample(0).middleRows(g == DecoderGroup::AHD ? 3 : 4, 1);
      }
    }
  }

  Var input_var = nn::make_leaf(std::move(input));
  std::map<DecoderGroup, Var> content_var, target_var, fused;
  for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
    content_var[g] = nn::make_leaf(std::move(content[g]));
    target_var[g] = nn::make_leaf(std::move(target[g]));
  }

  const FeaturePyramid feats = generator_->encode(input_var);
  for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE})
    fused[g] = generator_->decode(feats, g, content_var[g]).fused;

  const Scalar lr = current_lr();

  // D step: fakes detached so only discriminator parameters move.
  {
    std::vector<Var> terms;
    for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
      const auto real = discriminator_->discriminate(input_var, target_var[g]);
      const auto fake =
          discriminator_->discriminate(input_var, nn::detach(fused[g]));
      terms.push_back(discriminator_loss(real, fake));
    }
    Var d_total = nn::add_scalars(terms, {0.5, 0.5});
    losses.discriminator = d_total->value.scalar();
    discriminator_->params().zero_grad();
    nn::backward(d_total);
    adam_d_.step(discriminator_->params(), lr);
  }
  if (options_.after_d_step_hook) options_.after_d_step_hook();

  // G step: perceptual + non-saturating adversarial through the updated D.
  {
    std::map<DecoderGroup, Var> perc, adv;
    for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
      perc[g] = perceptual_loss(fused[g], target_var[g], *perceptual_);
      adv[g] = generator_adversarial_loss(
          discriminator_->discriminate(input_var, fused[g]));
    }
    Var g_total = total_generator_loss(perc, adv, options_.weights);
    losses.perceptual_ahd = perc[DecoderGroup::AHD]->value.scalar();
    losses.perceptual_ahe = perc[DecoderGroup::AHE]->value.scalar();
    losses.adversarial_g = adv[DecoderGroup::AHD]->value.scalar() +
                           adv[DecoderGroup::AHE]->value.scalar();
    losses.total_g = g_total->value.scalar();
    generator_->params().zero_grad();
    discriminator_->params().zero_grad();  // scratch grads from the G pass
    nn::backward(g_total);
    adam_g_.step(generator_->params(), lr);
    discriminator_->params().zero_grad();
  }

  const bool finite =
      std::isfinite(losses.discriminator) && std::isfinite(losses.total_g);
  if (!finite)
    throw TrainAbort("non-finite loss at step " + std::to_string(step_),
                     losses.batch_ids);

  ++step_;
  log_.push_back(losses);

  if (options_.loss_log_path) {
    std::ofstream out(*options_.loss_log_path, std::ios::app);
    nlohmann::json row{{"step", losses.step},
                       {"epoch", losses.epoch},
                       {"perceptual_ahd", losses.perceptual_ahd},
                       {"perceptual_ahe", losses.perceptual_ahe},
                       {"adversarial_g", losses.adversarial_g},
                       {"discriminator", losses.discriminator},
                       {"total_g", losses.total_g}};
    out << row.dump() << "\n";
  }
  return losses;
}

StepLosses Trainer::run() {
  const long total_steps =
      options_.schedule.max_steps
          ? *options_.schedule.max_steps
          : steps_per_epoch_ * static_cast<long>(options_.schedule.epochs);
  StepLosses last;
  int last_ckpt_epoch = -1;
  while (step_ < total_steps) {
    last = step();
    if (options_.checkpoint_dir &&
        step_ % steps_per_epoch_ == 0) {
      const int ep = epoch();
      if (ep != last_ckpt_epoch &&
          ep % options_.schedule.checkpoint_every_epochs == 0) {
        save_checkpoint(make_checkpoint(),
                        *options_.checkpoint_dir /
                            ("ckpt_epoch_" + std::to_string(ep) + ".bin"));
        last_ckpt_epoch = ep;
      }
    }
  }
  if (options_.checkpoint_dir)
    save_checkpoint(make_checkpoint(), *options_.checkpoint_dir / "ckpt_last.bin");
  return last;
}

namespace {

void store_adam(Checkpoint& ckpt, const std::string& prefix,
                const nn::Adam& adam) {
  ckpt.extra[prefix + "_t"] = adam.state().t;
  for (const auto& [name, m] : adam.state().m) {
    nn::Tensor t(1, 1, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    t.data = m;
    ckpt.blobs["optim." + prefix + ".m." + name] = std::move(t);
  }
  for (const auto& [name, v] : adam.state().v) {
    nn::Tensor t(1, 1, static_cast<int>(v.rows()), static_cast<int>(v.cols()));
    t.data = v;
    ckpt.blobs["optim." + prefix + ".v." + name] = std::move(t);
  }
}

void restore_adam(const Checkpoint& ckpt, const std::string& prefix,
                  const nn::ParamSet& params, nn::Adam& adam) {
  nn::Adam::State state;
  state.t = ckpt.extra.value(prefix + "_t", 0L);
  for (const auto& e : params.entries()) {
    auto mit = ckpt.blobs.find("optim." + prefix + ".m." + e.name);
    auto vit = ckpt.blobs.find("optim." + prefix + ".v." + e.name);
    if (mit != ckpt.blobs.end()) state.m[e.name] = mit->second.data;
    if (vit != ckpt.blobs.end()) state.v[e.name] = vit->second.data;
  }
  adam.restore(std::move(state));
}

}  // namespace

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ckpt;
  ckpt.generator_config = options_.generator;
  ckpt.discriminator_config = options_.discriminator;
  ckpt.extra["step"] = step_;
  ckpt.extra["epoch"] = epoch();
  ckpt.extra["seed"] = options_.seed;
  store_params(ckpt, "g.", generator_->params());
  store_params(ckpt, "d.", discriminator_->params());
  store_adam(ckpt, "adam_g", adam_g_);
  store_adam(ckpt, "adam_d", adam_d_);
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
  if (ckpt.generator_config.mode != options_.generator.mode)
    throw ConfigError("checkpoint mode does not match trainer mode");
  restore_params(ckpt, "g.", generator_->params());
  restore_params(ckpt, "d.", discriminator_->params());
  restore_adam(ckpt, "adam_g", generator_->params(), adam_g_);
  restore_adam(ckpt, "adam_d", discriminator_->params(), adam_d_);
  step_ = ckpt.extra.value("step", 0L);
}

std::uint64_t param_hash(const nn::ParamSet& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : params.entries()) {
    const auto* bytes =
        reinterpret_cast<const unsigned char*>(e.var->value.data.data());
    const std::size_t len = sizeof(Scalar) *
                            static_cast<std::size_t>(e.var->value.data.size());
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

Checkpoint train(std::vector<TrainItem> data, GenerationMode mode,
                 TrainerOptions options) {
  options.generator.mode = mode;
  Trainer trainer(std::move(data), options);
  trainer.run();
  return trainer.make_checkpoint();
}

Checkpoint finetune_depth_level(const Checkpoint& rgb_checkpoint,
                                std::vector<TrainItem> data,
                                TrainerOptions options) {
  if (rgb_checkpoint.generator_config.mode != GenerationMode::RgbLevel)
    throw ConfigError("finetune_depth_level needs an RGB-level checkpoint");
  options.generator = rgb_checkpoint.generator_config;
  options.generator.mode = GenerationMode::DepthLevel;

  Trainer trainer(std::move(data), options);
  // Load RGB weights into an RGB-shaped model, then swap the heads.
  GeneratorModel staging(rgb_checkpoint.generator_config,
                         derive_seed(options.seed, "staging"));
  restore_params(rgb_checkpoint, "g.", staging.params());
  staging.reshape_output_head(GenerationMode::DepthLevel,
                              derive_seed(options.seed, "depth-head"));
  for (const auto& e : staging.params().entries())
    trainer.generator().params().find(e.name)->value = e.var->value;

  trainer.run();
  return trainer.make_checkpoint();
}

std::unique_ptr<GeneratorModel> generator_from_checkpoint(
    const Checkpoint& ckpt, std::optional<GenerationMode> expected_mode) {
  if (expected_mode && ckpt.generator_config.mode != *expected_mode)
    throw ConfigError(
        std::string("checkpoint is ") +
        to_string(ckpt.generator_config.mode) +
        "-level; requested " + to_string(*expected_mode) +
        "-level (run finetune-depth to convert)");
  auto model = std::make_unique<GeneratorModel>(ckpt.generator_config, 0);
  restore_params(ckpt, "g.", model->params());
  return model;
}

}  // namespace anogen
