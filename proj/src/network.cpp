#include "anogen/network.hpp"

#include <cstring>
#include <fstream>

namespace anogen {

using nn::Var;

int GeneratorConfig::channels_at(int scale) const {
  return std::min(base_channels << scale, base_channels * 8);
}

void GeneratorConfig::validate() const {
  if (scales != 4) throw ConfigError("generator uses a fixed 4-scale pyramid");
  const int div = 1 << (scales - 1);
  if (input_resolution <= 0 || input_resolution % div != 0)
    throw ConfigError("input_resolution must be divisible by " +
                      std::to_string(div));
  if (base_channels < 1 || resnet_blocks < 1)
    throw ConfigError("generator channel/block counts must be >= 1");
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"input_resolution", input_resolution},
          {"scales", scales},
          {"base_channels", base_channels},
          {"resnet_blocks", resnet_blocks},
          {"mode", mode == GenerationMode::RgbLevel ? "rgb" : "depth"}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.input_resolution = j.at("input_resolution").get<int>();
  c.scales = j.at("scales").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.resnet_blocks = j.at("resnet_blocks").get<int>();
  c.mode = j.at("mode").get<std::string>() == "rgb" ? GenerationMode::RgbLevel
                                                    : GenerationMode::DepthLevel;
  return c;
}

nlohmann::json DiscriminatorConfig::to_json() const {
  return {{"num_scales", num_scales}, {"base_channels", base_channels}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  c.num_scales = j.at("num_scales").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  return c;
}

namespace {

constexpr int kConditionChannels = 5;

struct ConvParams {
  Var w, b;
};

ConvParams add_conv(nn::ParamSet& params, const std::string& name, int in_ch,
                    int out_ch, int k, Rng& rng) {
  ConvParams p;
  p.w = params.add(name + ".w", nn::normal_init(out_ch, in_ch, k, k, 0.02, rng));
  p.b = params.add(name + ".b", nn::constant_init(1, out_ch, 1, 1, 0.0));
  return p;
}

struct NormParams {
  Var gamma, beta;
};

NormParams add_norm(nn::ParamSet& params, const std::string& name, int ch) {
  NormParams p;
  p.gamma = params.add(name + ".gamma", nn::constant_init(1, ch, 1, 1, 1.0));
  p.beta = params.add(name + ".beta", nn::constant_init(1, ch, 1, 1, 0.0));
  return p;
}

Var conv_norm_relu(const nn::ParamSet& params, const std::string& name,
                   const Var& x, const nn::ConvSpec& spec) {
  Var y = nn::conv2d(x, params.find(name + ".w"), params.find(name + ".b"), spec);
  y = nn::instance_norm(y, params.find(name + ".norm.gamma"),
                        params.find(name + ".norm.beta"));
  return nn::relu(y);
}

Var resnet_block(const nn::ParamSet& params, const std::string& name,
                 const Var& x) {
  Var y = conv_norm_relu(params, name + ".conv0", x, {3, 1, 1});
  y = nn::conv2d(y, params.find(name + ".conv1.w"),
                 params.find(name + ".conv1.b"), {3, 1, 1});
  y = nn::instance_norm(y, params.find(name + ".conv1.norm.gamma"),
                        params.find(name + ".conv1.norm.beta"));
  return nn::relu(nn::add(x, y));
}

// Decoder branch from the R/4 trunk feature up to full resolution.
// Consumes encoder skips f1 (R/2) and f0 (R).
Var run_branch(const nn::ParamSet& params, const std::string& name,
               const Var& trunk, const Var& f1, const Var& f0) {
  Var y = nn::upsample_nearest2(trunk);
  y = conv_norm_relu(params, name + ".up1", y, {3, 1, 1});
  y = nn::concat_channels(y, f1);
  y = conv_norm_relu(params, name + ".mix1", y, {3, 1, 1});
  y = nn::upsample_nearest2(y);
  y = conv_norm_relu(params, name + ".up2", y, {3, 1, 1});
  y = nn::concat_channels(y, f0);
  y = conv_norm_relu(params, name + ".mix2", y, {3, 1, 1});
  return nn::conv2d(y, params.find(name + ".head.w"),
                    params.find(name + ".head.b"), {3, 1, 1});
}

std::string group_prefix(DecoderGroup g) {
  return g == DecoderGroup::AHD ? "ahd" : "ahe";
}

}  // namespace

GeneratorModel::GeneratorModel(const GeneratorConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng = make_rng(seed, "generator-init");
  const int c0 = config_.channels_at(0), c1 = config_.channels_at(1),
            c2 = config_.channels_at(2), c3 = config_.channels_at(3);

  add_conv(params_, "encoder.stem", kConditionChannels, c0, 7, rng);
  add_norm(params_, "encoder.stem.norm", c0);
  add_conv(params_, "encoder.down1", c0, c1, 3, rng);
  add_norm(params_, "encoder.down1.norm", c1);
  add_conv(params_, "encoder.down2", c1, c2, 3, rng);
  add_norm(params_, "encoder.down2.norm", c2);
  add_conv(params_, "encoder.down3", c2, c3, 3, rng);
  add_norm(params_, "encoder.down3.norm", c3);

  for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
    const std::string p = group_prefix(g);
    for (int i = 0; i < config_.resnet_blocks; ++i) {
      const std::string rb = p + ".trunk.res" + std::to_string(i);
      add_conv(params_, rb + ".conv0", c3, c3, 3, rng);
      add_norm(params_, rb + ".conv0.norm", c3);
      add_conv(params_, rb + ".conv1", c3, c3, 3, rng);
      add_norm(params_, rb + ".conv1.norm", c3);
    }
    add_conv(params_, p + ".trunk.up0", c3, c2, 3, rng);
    add_norm(params_, p + ".trunk.up0.norm", c2);
    add_conv(params_, p + ".trunk.mix0", c2 + c2, c2, 3, rng);
    add_norm(params_, p + ".trunk.mix0.norm", c2);

    for (const char* branch : {"texture", "mask"}) {
      const std::string bp = p + "." + branch;
      add_conv(params_, bp + ".up1", c2, c1, 3, rng);
      add_norm(params_, bp + ".up1.norm", c1);
      add_conv(params_, bp + ".mix1", c1 + c1, c1, 3, rng);
      add_norm(params_, bp + ".mix1.norm", c1);
      add_conv(params_, bp + ".up2", c1, c0, 3, rng);
      add_norm(params_, bp + ".up2.norm", c0);
      add_conv(params_, bp + ".mix2", c0 + c0, c0, 3, rng);
      add_norm(params_, bp + ".mix2.norm", c0);
      const int head_out =
          std::string(branch) == "mask" ? 1 : config_.output_channels();
      add_conv(params_, bp + ".head", c0, head_out, 3, rng);
    }
  }
}

FeaturePyramid GeneratorModel::encode(const Var& conditions) const {
  const nn::Tensor& in = conditions->value;
  if (in.c != kConditionChannels)
    throw DimensionError("encoder expects 5 condition channels");
  if (in.h != config_.input_resolution || in.w != config_.input_resolution)
    throw DimensionError("encoder input resolution mismatch: got " +
                         std::to_string(in.h) + ", configured " +
                         std::to_string(config_.input_resolution));
  FeaturePyramid feats;
  Var f0 = conv_norm_relu(params_, "encoder.stem", conditions, {7, 1, 3});
  Var f1 = conv_norm_relu(params_, "encoder.down1", f0, {3, 2, 1});
  Var f2 = conv_norm_relu(params_, "encoder.down2", f1, {3, 2, 1});
  Var f3 = conv_norm_relu(params_, "encoder.down3", f2, {3, 2, 1});
  feats = {f0, f1, f2, f3};
  return feats;
}

DecodedBatch GeneratorModel::decode(const FeaturePyramid& features,
                                    DecoderGroup group,
                                    const Var& content) const {
  if (features.size() != 4)
    throw ParameterError("decode expects a 4-scale feature pyramid");
  if (content->value.c != config_.output_channels())
    throw DimensionError("decode content channels do not match output");
  const std::string p = group_prefix(group);

  Var y = features[3];
  for (int i = 0; i < config_.resnet_blocks; ++i)
    y = resnet_block(params_, p + ".trunk.res" + std::to_string(i), y);
  y = nn::upsample_nearest2(y);
  y = conv_norm_relu(params_, p + ".trunk.up0", y, {3, 1, 1});
  y = nn::concat_channels(y, features[2]);
  y = conv_norm_relu(params_, p + ".trunk.mix0", y, {3, 1, 1});

  DecodedBatch out;
  out.texture = nn::tanh(
      run_branch(params_, p + ".texture", y, features[1], features[0]));
  out.mask = nn::sigmoid(
      run_branch(params_, p + ".mask", y, features[1], features[0]));
  out.fused = nn::fuse_blend(content, out.texture, out.mask);
  return out;
}

std::size_t GeneratorModel::group_param_count(DecoderGroup group) const {
  const std::string p = group_prefix(group) + ".";
  std::size_t n = 0;
  for (const auto& e : params_.entries())
    if (e.name.rfind(p, 0) == 0)
      n += static_cast<std::size_t>(e.var->value.size());
  return n;
}

void GeneratorModel::reshape_output_head(GenerationMode new_mode,
                                         std::uint64_t seed) {
  if (new_mode == config_.mode) return;
  config_.mode = new_mode;
  Rng rng = make_rng(seed, "head-reinit");
  const int c0 = config_.channels_at(0);
  for (DecoderGroup g : {DecoderGroup::AHD, DecoderGroup::AHE}) {
    const std::string name = group_prefix(g) + ".texture.head";
    Var w = params_.find(name + ".w");
    Var b = params_.find(name + ".b");
    w->value = nn::normal_init(config_.output_channels(), c0, 3, 3, 0.02, rng);
    b->value = nn::constant_init(1, config_.output_channels(), 1, 1, 0.0);
    w->grad_ready = false;
    b->grad_ready = false;
  }
}

DiscriminatorModel::DiscriminatorModel(const DiscriminatorConfig& config,
                                       int condition_channels,
                                       int candidate_channels,
                                       std::uint64_t seed)
    : config_(config),
      condition_channels_(condition_channels),
      candidate_channels_(candidate_channels) {
  if (config_.num_scales < 1)
    throw ConfigError("discriminator needs at least one scale");
  Rng rng = make_rng(seed, "discriminator-init");
  const int in_ch = condition_channels + candidate_channels;
  const int b = config_.base_channels;
  for (int s = 0; s < config_.num_scales; ++s) {
    const std::string p = "scale" + std::to_string(s);
    add_conv(params_, p + ".conv0", in_ch, b, 4, rng);
    add_conv(params_, p + ".conv1", b, 2 * b, 4, rng);
    add_norm(params_, p + ".conv1.norm", 2 * b);
    add_conv(params_, p + ".conv2", 2 * b, 4 * b, 4, rng);
    add_norm(params_, p + ".conv2.norm", 4 * b);
    add_conv(params_, p + ".logits", 4 * b, 1, 3, rng);
  }
}

std::vector<Var> DiscriminatorModel::discriminate(const Var& conditions,
                                                  const Var& candidate) const {
  if (candidate->value.c != candidate_channels_)
    throw DimensionError("discriminator candidate channel mismatch");
  if (conditions->value.h != candidate->value.h ||
      conditions->value.w != candidate->value.w)
    throw DimensionError("discriminator condition/candidate size mismatch");

  Var input = nn::concat_channels(conditions, candidate);
  std::vector<Var> grids;
  for (int s = 0; s < config_.num_scales; ++s) {
    const std::string p = "scale" + std::to_string(s);
    Var y = nn::leaky_relu(nn::conv2d(input, params_.find(p + ".conv0.w"),
                                      params_.find(p + ".conv0.b"), {4, 2, 1}));
    y = nn::conv2d(y, params_.find(p + ".conv1.w"),
                   params_.find(p + ".conv1.b"), {4, 2, 1});
    y = nn::instance_norm(y, params_.find(p + ".conv1.norm.gamma"),
                          params_.find(p + ".conv1.norm.beta"));
    y = nn::leaky_relu(y);
    y = nn::conv2d(y, params_.find(p + ".conv2.w"),
                   params_.find(p + ".conv2.b"), {4, 2, 1});
    y = nn::instance_norm(y, params_.find(p + ".conv2.norm.gamma"),
                          params_.find(p + ".conv2.norm.beta"));
    y = nn::leaky_relu(y);
    grids.push_back(nn::conv2d(y, params_.find(p + ".logits.w"),
                               params_.find(p + ".logits.b"), {3, 1, 1}));
    if (s + 1 < config_.num_scales) input = nn::avg_pool2(input);
  }
  return grids;
}

// ---- bridging ----

nn::Tensor triplet_to_tensor(const ConditionTriplet& triplet) {
  return planes_to_tensor({&triplet.color, &triplet.depth, &triplet.edge});
}

nn::Tensor planes_to_tensor(const std::vector<const ImagePlane*>& planes) {
  if (planes.empty()) throw ParameterError("planes_to_tensor: empty list");
  int channels = 0;
  for (const auto* p : planes) channels += p->channel_count();
  const int h = planes[0]->height(), w = planes[0]->width();
  nn::Tensor out(1, channels, h, w);
  int at = 0;
  for (const auto* p : planes) {
    if (p->height() != h || p->width() != w)
      throw DimensionError("planes_to_tensor: shape mismatch");
    const ImagePlane s = convert_range(*p, RangeTag::Signed);
    for (int c = 0; c < s.channel_count(); ++c, ++at)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.data(at, y * w + x) = s.chan(c)(y, x);
  }
  return out;
}

ImagePlane tensor_to_plane(const nn::Tensor& tensor, int sample,
                           PlaneRole role, RangeTag tag) {
  ImagePlane plane(tensor.h, tensor.w, role, RangeTag::Signed);
  const int ch = channels_for_role(role);
  if (ch > tensor.c) throw DimensionError("tensor_to_plane channel mismatch");
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < tensor.h; ++y)
      for (int x = 0; x < tensor.w; ++x)
        plane.chan(c)(y, x) = tensor.data(sample * tensor.c + c, y * tensor.w + x);
  if (tag != RangeTag::Signed) {
    // Clamp before converting; squashing activations keep values inside
    // the open interval but fused outputs may kiss the endpoints.
    for (auto& chan : plane.channels)
      chan = chan.min(Scalar(1)).max(Scalar(-1));
    plane = convert_range(plane, tag);
  }
  return plane;
}

GenerationResult run_generator(const GeneratorModel& model,
                               const ConditionTriplet& conditions,
                               DecoderGroup group) {
  conditions.validate();
  Var input = nn::make_leaf(triplet_to_tensor(conditions));
  FeaturePyramid feats = model.encode(input);

  const GenerationMode mode = model.config().mode;
  nn::Tensor content_tensor;
  if (mode == GenerationMode::RgbLevel) {
    content_tensor = planes_to_tensor({&conditions.color});
  } else {
    const ImagePlane& ref = group == DecoderGroup::AHD ? conditions.depth
                                                       : conditions.edge;
    content_tensor = planes_to_tensor({&ref});
  }
  Var content = nn::make_leaf(std::move(content_tensor));
  DecodedBatch batch = model.decode(feats, group, content);

  GenerationResult result;
  result.decoder = group;
  const PlaneRole out_role =
      mode == GenerationMode::RgbLevel ? PlaneRole::Color
      : group == DecoderGroup::AHD     ? PlaneRole::Depth
                                       : PlaneRole::Edge;
  result.anomaly_source =
      tensor_to_plane(batch.texture->value, 0, out_role, RangeTag::Signed);
  result.fusion_map = tensor_to_plane(batch.mask->value, 0,
                                      PlaneRole::FusionMap, RangeTag::Signed);
  // Mask branch emits [0,1] directly; undo the signed default.
  result.fusion_map.range_tag = RangeTag::Unit;
  result.fused = tensor_to_plane(batch.fused->value, 0, out_role,
                                 RangeTag::Signed);
  return result;
}

// ---- checkpoint container ----
// Layout: magic, header-length, JSON header, then per-blob: name length,
// name, 4 dims, raw float64 payload.

namespace {
constexpr char kMagic[8] = {'A', 'G', 'C', 'K', 'P', '0', '0', '2'};
}

void store_params(Checkpoint& ckpt, const std::string& prefix,
                  const nn::ParamSet& params) {
  for (const auto& e : params.entries())
    ckpt.blobs[prefix + e.name] = e.var->value;
}

void restore_params(const Checkpoint& ckpt, const std::string& prefix,
                    nn::ParamSet& params) {
  for (const auto& e : params.entries()) {
    auto it = ckpt.blobs.find(prefix + e.name);
    if (it == ckpt.blobs.end())
      throw IoError("checkpoint missing parameter " + prefix + e.name);
    if (!it->second.same_shape(e.var->value))
      throw IoError("checkpoint parameter shape mismatch: " + prefix + e.name);
    e.var->value = it->second;
    e.var->grad_ready = false;
  }
}

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& path) {
  nlohmann::json header{{"generator", ckpt.generator_config.to_json()},
                        {"discriminator", ckpt.discriminator_config.to_json()},
                        {"extra", ckpt.extra}};
  const std::string header_str = header.dump();

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string());
    out.write(kMagic, 8);
    const std::uint64_t hlen = header_str.size();
    out.write(reinterpret_cast<const char*>(&hlen), 8);
    out.write(header_str.data(), static_cast<std::streamsize>(hlen));
    const std::uint64_t count = ckpt.blobs.size();
    out.write(reinterpret_cast<const char*>(&count), 8);
    for (const auto& [name, tensor] : ckpt.blobs) {
      const std::uint64_t nlen = name.size();
      out.write(reinterpret_cast<const char*>(&nlen), 8);
      out.write(name.data(), static_cast<std::streamsize>(nlen));
      const std::int32_t dims[4] = {tensor.n, tensor.c, tensor.h, tensor.w};
      out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
      out.write(reinterpret_cast<const char*>(tensor.data.data()),
                static_cast<std::streamsize>(sizeof(Scalar) * tensor.data.size()));
    }
    if (!out) throw IoError("checkpoint write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("not a checkpoint file (or incompatible version): " +
                  path.string());
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  std::string header_str(hlen, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(hlen));
  const auto header = nlohmann::json::parse(header_str);

  Checkpoint ckpt;
  ckpt.generator_config = GeneratorConfig::from_json(header.at("generator"));
  ckpt.discriminator_config =
      DiscriminatorConfig::from_json(header.at("discriminator"));
  ckpt.extra = header.at("extra");

  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t nlen = 0;
    in.read(reinterpret_cast<char*>(&nlen), 8);
    std::string name(nlen, '\0');
    in.read(name.data(), static_cast<std::streamsize>(nlen));
    std::int32_t dims[4];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    nn::Tensor t(dims[0], dims[1], dims[2], dims[3]);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * t.data.size()));
    ckpt.blobs[name] = std::move(t);
  }
  if (!in) throw IoError("truncated checkpoint: " + path.string());
  return ckpt;
}

}  // namespace anogen
