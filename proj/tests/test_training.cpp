#include <doctest.h>

#include <cmath>

#include "anogen/training.hpp"

using namespace anogen;

namespace {

std::vector<TrainItem> toy_items(int count, int res, std::uint64_t seed) {
  Rng rng = make_rng(seed, "toy-train-items");
  std::vector<TrainItem> items;
  for (int i = 0; i < count; ++i) {
    TrainItem item;
    item.id = "toy" + std::to_string(i);
    ImagePlane color(res, res, PlaneRole::Color, RangeTag::Unit);
    for (auto& ch : color.channels)
      for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x)
          ch(y, x) = 0.5 + 0.4 * std::sin(0.3 * x + 0.2 * y + i);
    ImagePlane depth(res, res, PlaneRole::Depth, RangeTag::Unit);
    ImagePlane edge(res, res, PlaneRole::Edge, RangeTag::Unit);
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        depth.chan(0)(y, x) = 0.5 + 0.3 * std::cos(0.25 * x + i);
        edge.chan(0)(y, x) = uniform01(rng) < 0.1 ? 1.0 : 0.0;
      }
    item.data.conditions.color = std::move(color);
    item.data.conditions.depth = std::move(depth);
    item.data.conditions.edge = std::move(edge);
    items.push_back(std::move(item));
  }
  return items;
}

TrainerOptions tiny_options(int res = 32, int base = 8) {
  TrainerOptions opt;
  opt.schedule.epochs = 100;
  opt.schedule.batch_size = 2;
  opt.schedule.learning_rate = 2e-4;
  opt.generator.input_resolution = res;
  opt.generator.base_channels = base;
  opt.generator.resnet_blocks = 1;
  opt.discriminator.base_channels = 8;
  opt.seed = 77;
  return opt;
}

}  // namespace

TEST_CASE("lr schedule is piecewise linear and hits zero at the end") {
  TrainSchedule s;
  s.epochs = 100;
  s.learning_rate = 2e-4;
  s.decay_start_fraction = 0.5;
  CHECK(lr_at(s, 0) == doctest::Approx(2e-4));
  CHECK(lr_at(s, 50) == doctest::Approx(2e-4));
  CHECK(lr_at(s, 75) == doctest::Approx(1e-4));
  CHECK(std::abs(lr_at(s, 100)) < 1e-9);
}

TEST_CASE("adversarial losses at zero logits give the closed forms") {
  nn::Tensor grid(1, 1, 4, 4);  // zero logits
  std::vector<nn::Var> real{nn::make_leaf(grid)}, fake{nn::make_leaf(grid)};
  CHECK(discriminator_loss(real, fake)->value.scalar() ==
        doctest::Approx(2.0 * std::log(2.0)));
  CHECK(generator_adversarial_loss(fake)->value.scalar() ==
        doctest::Approx(std::log(2.0)));
}

TEST_CASE("perfectly confident discriminator drives d_loss below 2e-6") {
  const Scalar eps = 1e-7;
  const Scalar confident = std::log((1.0 - eps) / eps);
  nn::Tensor real_grid(1, 1, 4, 4), fake_grid(1, 1, 4, 4);
  real_grid.data.setConstant(confident);    // sigmoid -> 1 - eps
  fake_grid.data.setConstant(-confident);   // sigmoid -> eps
  std::vector<nn::Var> real{nn::make_leaf(real_grid)};
  std::vector<nn::Var> fake{nn::make_leaf(fake_grid)};
  CHECK(discriminator_loss(real, fake)->value.scalar() < 2e-6);
}

TEST_CASE("adversarial_losses wrapper returns both scalars") {
  Rng rng = make_rng(90, "adv-wrap");
  DiscriminatorConfig dc;
  dc.base_channels = 8;
  DiscriminatorModel disc(dc, 5, 3, 1);
  nn::Tensor cond(1, 5, 32, 32), real(1, 3, 32, 32), fake(1, 3, 32, 32);
  for (auto* t : {&cond, &real, &fake})
    for (int i = 0; i < t->data.rows(); ++i)
      for (int j = 0; j < t->data.cols(); ++j)
        t->data(i, j) = 2 * uniform01(rng) - 1;
  const auto [d, g] = adversarial_losses(disc, nn::make_leaf(cond),
                                         nn::make_leaf(real),
                                         nn::make_leaf(fake));
  CHECK(std::isfinite(d));
  CHECK(std::isfinite(g));
  CHECK(d > 0);
  CHECK(g > 0);
}

TEST_CASE("perceptual loss: zero at equality, symmetric, fd-gradient") {
  Rng rng = make_rng(91, "perc");
  PerceptualBackbone backbone(3, 5);
  nn::Tensor a(1, 3, 16, 16), b(1, 3, 16, 16);
  for (auto* t : {&a, &b})
    for (int i = 0; i < t->data.rows(); ++i)
      for (int j = 0; j < t->data.cols(); ++j)
        t->data(i, j) = 2 * uniform01(rng) - 1;

  nn::Var va = nn::make_leaf(a), vb = nn::make_leaf(b);
  CHECK(perceptual_loss(va, va, backbone)->value.scalar() == 0.0);
  CHECK(perceptual_loss(va, vb, backbone)->value.scalar() ==
        doctest::Approx(perceptual_loss(vb, va, backbone)->value.scalar()));

  // finite differences wrt the generated tensor on 32 coordinates
  nn::Var gen = nn::make_leaf(a, true);
  nn::Var loss = perceptual_loss(gen, vb, backbone);
  nn::backward(loss);
  const Scalar h = 1e-6;
  for (int pick = 0; pick < 32; ++pick) {
    const int i = uniform_int(rng, 0, static_cast<int>(a.data.rows()) - 1);
    const int j = uniform_int(rng, 0, static_cast<int>(a.data.cols()) - 1);
    const Scalar saved = gen->value.data(i, j);
    gen->value.data(i, j) = saved + h;
    const Scalar up = perceptual_loss(gen, vb, backbone)->value.scalar();
    gen->value.data(i, j) = saved - h;
    const Scalar down = perceptual_loss(gen, vb, backbone)->value.scalar();
    gen->value.data(i, j) = saved;
    const Scalar fd = (up - down) / (2 * h);
    const Scalar an = gen->grad.data(i, j);
    CHECK(std::abs(fd - an) <=
          1e-3 * std::max({std::abs(fd), std::abs(an), Scalar(1e-8)}));
  }
}

TEST_CASE("total generator loss obeys weight zeroing") {
  nn::Tensor one(1, 1, 1, 1);
  one.data(0, 0) = 0.7;
  nn::Tensor two(1, 1, 1, 1);
  two.data(0, 0) = 0.3;
  std::map<DecoderGroup, nn::Var> perc{
      {DecoderGroup::AHD, nn::make_leaf(one)},
      {DecoderGroup::AHE, nn::make_leaf(two)}};
  std::map<DecoderGroup, nn::Var> adv{
      {DecoderGroup::AHD, nn::make_leaf(two)},
      {DecoderGroup::AHE, nn::make_leaf(two)}};
  CHECK(total_generator_loss(perc, adv, {1.0, 0.0})->value.scalar() ==
        doctest::Approx(1.0));
  CHECK(total_generator_loss(perc, adv, {0.0, 0.0})->value.scalar() == 0.0);
  CHECK(total_generator_loss(perc, adv, {1.0, 1.0})->value.scalar() ==
        doctest::Approx(1.0 + 0.6));
}

TEST_CASE("trainer: D step leaves G untouched and vice versa") {
  auto opt = tiny_options();
  Trainer* handle = nullptr;
  std::uint64_t g_before = 0, d_mid = 0;
  bool hook_ran = false;
  opt.after_d_step_hook = [&] {
    hook_ran = true;
    // generator hash unchanged by the D update
    CHECK(param_hash(handle->generator().params()) == g_before);
    d_mid = param_hash(handle->discriminator().params());
  };
  Trainer trainer(toy_items(4, 32, 1), opt);
  handle = &trainer;
  g_before = param_hash(trainer.generator().params());
  const std::uint64_t d_before = param_hash(trainer.discriminator().params());
  trainer.step();
  REQUIRE(hook_ran);
  CHECK(d_mid != d_before);  // D moved during its step
  // discriminator untouched during the G update
  CHECK(param_hash(trainer.discriminator().params()) == d_mid);
  CHECK(param_hash(trainer.generator().params()) != g_before);
}

TEST_CASE("trainer losses are finite at initialization") {
  Trainer trainer(toy_items(4, 32, 2), tiny_options());
  const StepLosses losses = trainer.step();
  CHECK(std::isfinite(losses.total_g));
  CHECK(std::isfinite(losses.discriminator));
  CHECK(losses.batch_ids.size() == 2);
}

TEST_CASE("checkpoint resume reproduces the continuation exactly") {
  auto opt = tiny_options();
  opt.schedule.max_steps = 6;

  Trainer full(toy_items(4, 32, 3), opt);
  std::vector<Scalar> reference;
  for (int i = 0; i < 6; ++i) reference.push_back(full.step().total_g);

  Trainer head(toy_items(4, 32, 3), opt);
  for (int i = 0; i < 3; ++i) head.step();
  const Checkpoint ckpt = head.make_checkpoint();

  Trainer resumed(toy_items(4, 32, 3), opt);
  resumed.restore(ckpt);
  CHECK(resumed.global_step() == 3);
  for (int i = 3; i < 6; ++i) {
    const Scalar loss = resumed.step().total_g;
    CHECK(loss == doctest::Approx(reference[static_cast<std::size_t>(i)])
                      .epsilon(1e-12));
  }
}

TEST_CASE("seed change produces a different loss trajectory") {
  auto opt_a = tiny_options();
  auto opt_b = tiny_options();
  opt_b.seed = opt_a.seed + 1;
  Trainer a(toy_items(4, 32, 4), opt_a);
  Trainer b(toy_items(4, 32, 4), opt_b);
  Scalar la = 0, lb = 0;
  for (int i = 0; i < 2; ++i) {
    la = a.step().total_g;
    lb = b.step().total_g;
  }
  CHECK(la != lb);
}

TEST_CASE("non-finite loss aborts with batch ids") {
  Trainer trainer(toy_items(4, 32, 5), tiny_options());
  trainer.generator()
      .params()
      .find("encoder.stem.w")
      ->value.data(0, 0) = std::numeric_limits<Scalar>::quiet_NaN();
  CHECK_THROWS_AS(trainer.step(), TrainAbort);
}

TEST_CASE("finetune keeps encoder weights byte-identical before stepping") {
  auto opt = tiny_options();
  opt.schedule.max_steps = 2;
  Checkpoint rgb = train(toy_items(4, 32, 6), GenerationMode::RgbLevel, opt);

  // Stage the head swap exactly as finetune does, without stepping.
  GeneratorModel staging(rgb.generator_config, 1234);
  restore_params(rgb, "g.", staging.params());
  staging.reshape_output_head(GenerationMode::DepthLevel, 4321);
  for (const auto& e : staging.params().entries()) {
    if (e.name.rfind("encoder.", 0) != 0) continue;
    const nn::Tensor& blob = rgb.blobs.at("g." + e.name);
    CHECK(e.var->value.data == blob.data);
  }

  CHECK_THROWS_AS(
      finetune_depth_level(
          train(toy_items(4, 32, 7), GenerationMode::DepthLevel, opt),
          toy_items(4, 32, 7), opt),
      ConfigError);
}

TEST_CASE("finetune runs in depth mode from an rgb checkpoint") {
  auto opt = tiny_options();
  opt.schedule.max_steps = 2;
  const Checkpoint rgb = train(toy_items(3, 32, 8), GenerationMode::RgbLevel, opt);
  const Checkpoint depth = finetune_depth_level(rgb, toy_items(3, 32, 8), opt);
  CHECK(depth.generator_config.mode == GenerationMode::DepthLevel);
  auto model = generator_from_checkpoint(depth, GenerationMode::DepthLevel);
  CHECK(model->config().output_channels() == 1);
}
