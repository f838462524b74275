#pragma once

#include <filesystem>
#include <optional>

#include "anogen/augment.hpp"
#include "anogen/losses.hpp"
#include "anogen/nn/adam.hpp"

namespace anogen {

struct TrainSchedule {
  int epochs = 250;
  int batch_size = 28;
  Scalar learning_rate = 2e-4;
  // Constant lr until this fraction of epochs, then linear decay to zero
  // at the end of training.
  Scalar decay_start_fraction = 0.5;
  int checkpoint_every_epochs = 50;
  std::optional<long> max_steps;  // desk-scale override

  void validate() const;
};

// Piecewise-linear schedule; lr_at(s, s.epochs) == 0.
Scalar lr_at(const TrainSchedule& schedule, Scalar epoch);

struct StepLosses {
  long step = 0;
  int epoch = 0;
  Scalar perceptual_ahd = 0, perceptual_ahe = 0;
  Scalar adversarial_g = 0, discriminator = 0, total_g = 0;
  std::vector<std::string> batch_ids;
};

// Raised when any loss goes non-finite; carries the offending batch.
struct TrainAbort : std::runtime_error {
  std::vector<std::string> batch_ids;
  explicit TrainAbort(std::string msg, std::vector<std::string> ids)
      : std::runtime_error(std::move(msg)), batch_ids(std::move(ids)) {}
};

struct TrainItem {
  std::string id;
  SampleConditions data;
};

struct TrainerOptions {
  TrainSchedule schedule;
  LossWeights weights;
  AugmentationConfig augment;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> loss_log_path;
  std::optional<std::filesystem::path> checkpoint_dir;
  // Test hook, fired between the D update and the G update of a step.
  std::function<void()> after_d_step_hook;
};

// Alternating D-step / G-step trainer over both decoder groups jointly.
// All randomness is a pure function of (seed, purpose, step), so a
// restored checkpoint reproduces the exact continuation.
class Trainer {
 public:
  Trainer(std::vector<TrainItem> data, TrainerOptions options);

  StepLosses step();
  // Runs to the schedule end (epochs or max_steps); returns last losses.
  StepLosses run();

  long global_step() const { return step_; }
  int epoch() const;
  long steps_per_epoch() const { return steps_per_epoch_; }
  Scalar current_lr() const;

  GeneratorModel& generator() { return *generator_; }
  DiscriminatorModel& discriminator() { return *discriminator_; }
  const std::vector<StepLosses>& log() const { return log_; }

  Checkpoint make_checkpoint() const;
  void restore(const Checkpoint& ckpt);

 private:
  std::vector<std::size_t> batch_for_step(long step) const;

  std::vector<TrainItem> data_;
  TrainerOptions options_;
  long steps_per_epoch_ = 1;
  long step_ = 0;
  std::unique_ptr<GeneratorModel> generator_;
  std::unique_ptr<DiscriminatorModel> discriminator_;
  std::unique_ptr<PerceptualBackbone> perceptual_;
  nn::Adam adam_g_, adam_d_;
  std::vector<StepLosses> log_;
};

// FNV-1a over raw parameter bytes; detects any value change.
std::uint64_t param_hash(const nn::ParamSet& params);

// Spec-level entry points.
Checkpoint train(std::vector<TrainItem> data, GenerationMode mode,
                 TrainerOptions options);

// Initializes from an RGB-level checkpoint, swaps the texture heads to
// one channel, and trains in depth-level mode.
Checkpoint finetune_depth_level(const Checkpoint& rgb_checkpoint,
                                std::vector<TrainItem> data,
                                TrainerOptions options);

// Builds a generator from checkpoint blobs; throws ConfigError when the
// stored mode does not match the expectation.
std::unique_ptr<GeneratorModel> generator_from_checkpoint(
    const Checkpoint& ckpt, std::optional<GenerationMode> expected_mode = {});

}  // namespace anogen
