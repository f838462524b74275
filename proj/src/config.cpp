#include "anogen/config.hpp"

#include <chrono>
#include <cstring>
#include <fstream>

namespace anogen {

using nlohmann::json;

json RunConfig::to_json() const {
  json kinds = json::array();
  for (auto k : manipulation.kinds) kinds.push_back(to_string(k));
  json decs = json::array();
  for (auto d : decoders) decs.push_back(to_string(d));
  json j{
      {"dataset", {{"root", dataset_root.string()},
                   {"kind", to_string(dataset_kind)}}},
      {"mode", to_string(mode)},
      {"resolution", resolution},
      {"seed", seed},
      {"conditioning", {{"backend", conditioning_backend},
                        {"edge_sigma", edge_sigma},
                        {"depth_sigma", depth_sigma}}},
      {"generator", {{"base_channels", generator.base_channels},
                     {"resnet_blocks", generator.resnet_blocks}}},
      {"discriminator", discriminator.to_json()},
      {"training", {{"epochs", schedule.epochs},
                    {"batch_size", schedule.batch_size},
                    {"learning_rate", schedule.learning_rate},
                    {"decay_start_fraction", schedule.decay_start_fraction},
                    {"checkpoint_every_epochs", schedule.checkpoint_every_epochs}}},
      {"loss_weights", {{"perceptual", weights.perceptual_weight},
                        {"adversarial", weights.adversarial_weight}}},
      {"augment", {{"tps_probability", augment.tps_probability},
                   {"tps_displacement_bound", augment.tps_displacement_bound},
                   {"tps_region_frac_min", augment.tps_region_frac_min},
                   {"tps_region_frac_max", augment.tps_region_frac_max},
                   {"tps_feather", augment.tps_feather},
                   {"rtp_probability", augment.rtp_probability},
                   {"rtp_scale_min", augment.rtp_scale_min},
                   {"rtp_scale_max", augment.rtp_scale_max},
                   {"flip_probability", augment.flip_probability}}},
      {"manipulation", {{"kinds", kinds},
                        {"area_min", manipulation.bounds.area_min},
                        {"area_max", manipulation.bounds.area_max},
                        {"merge_alpha", manipulation.merge_alpha},
                        {"tps_displacement_bound",
                         manipulation.tps_displacement_bound}}},
      {"generate", {{"count_per_decoder", count_per_decoder},
                    {"normals_per_decoder", normals_per_decoder},
                    {"decoders", decs},
                    {"base_fraction", base_fraction},
                    {"split", generate_split}}},
      {"metrics", {{"is_splits", is_splits},
                   {"is_classes", is_classes},
                   {"tnr", tnr},
                   {"lpips_references", lpips_references}}},
      {"downstream", {{"base_channels", downstream.base_channels},
                      {"steps", downstream.steps},
                      {"batch_size", downstream.batch_size},
                      {"learning_rate", downstream.learning_rate},
                      {"normal_ratio", normal_ratio}}},
      {"output_root", output_root.string()}};
  if (schedule.max_steps) j["training"]["max_steps"] = *schedule.max_steps;
  if (cache_root) j["cache_root"] = cache_root->string();
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  std::vector<std::string> errors;
  auto guard = [&](const char* field, auto fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.push_back(std::string(field) + ": " + e.what());
    }
  };

  guard("dataset.root", [&] {
    c.dataset_root = j.at("dataset").at("root").get<std::string>();
  });
  guard("dataset.kind", [&] {
    c.dataset_kind =
        dataset_kind_from_string(j.at("dataset").at("kind").get<std::string>());
  });
  guard("mode", [&] {
    const auto m = j.value("mode", "rgb");
    if (m != "rgb" && m != "depth") throw ConfigError("must be rgb or depth");
    c.mode = m == "rgb" ? GenerationMode::RgbLevel : GenerationMode::DepthLevel;
  });
  guard("resolution", [&] {
    c.resolution = j.value("resolution", 256);
    if (c.resolution < 16 || c.resolution % 8 != 0)
      throw ConfigError("must be >= 16 and divisible by 8");
  });
  guard("seed", [&] { c.seed = j.value("seed", 1ULL); });
  guard("conditioning", [&] {
    if (j.contains("conditioning")) {
      const auto& cj = j.at("conditioning");
      c.conditioning_backend = cj.value("backend", "fallback");
      c.edge_sigma = cj.value("edge_sigma", 1.0);
      c.depth_sigma = cj.value("depth_sigma", 1.0);
    }
  });
  guard("generator", [&] {
    if (j.contains("generator")) {
      c.generator.base_channels = j.at("generator").value("base_channels", 64);
      c.generator.resnet_blocks = j.at("generator").value("resnet_blocks", 4);
    }
  });
  guard("discriminator", [&] {
    if (j.contains("discriminator"))
      c.discriminator = DiscriminatorConfig::from_json(j.at("discriminator"));
  });
  guard("training", [&] {
    if (j.contains("training")) {
      const auto& t = j.at("training");
      c.schedule.epochs = t.value("epochs", 250);
      c.schedule.batch_size = t.value("batch_size", 28);
      c.schedule.learning_rate = t.value("learning_rate", 2e-4);
      c.schedule.decay_start_fraction = t.value("decay_start_fraction", 0.5);
      c.schedule.checkpoint_every_epochs = t.value("checkpoint_every_epochs", 50);
      if (t.contains("max_steps") && !t.at("max_steps").is_null())
        c.schedule.max_steps = t.at("max_steps").get<long>();
      c.schedule.validate();
    }
  });
  guard("loss_weights", [&] {
    if (j.contains("loss_weights")) {
      c.weights.perceptual_weight = j.at("loss_weights").value("perceptual", 1.0);
      c.weights.adversarial_weight =
          j.at("loss_weights").value("adversarial", 1.0);
      c.weights.validate();
    }
  });
  guard("augment", [&] {
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      c.augment.tps_probability = a.value("tps_probability", 0.99);
      c.augment.tps_displacement_bound = a.value("tps_displacement_bound", 0.1);
      c.augment.tps_region_frac_min = a.value("tps_region_frac_min", 0.2);
      c.augment.tps_region_frac_max = a.value("tps_region_frac_max", 0.6);
      c.augment.tps_feather = a.value("tps_feather", 4.0);
      c.augment.rtp_probability = a.value("rtp_probability", 0.5);
      c.augment.rtp_scale_min = a.value("rtp_scale_min", 0.7);
      c.augment.rtp_scale_max = a.value("rtp_scale_max", 1.0);
      c.augment.flip_probability = a.value("flip_probability", 0.5);
    }
  });
  guard("manipulation", [&] {
    if (j.contains("manipulation")) {
      const auto& m = j.at("manipulation");
      if (m.contains("kinds")) {
        c.manipulation.kinds.clear();
        for (const auto& k : m.at("kinds"))
          c.manipulation.kinds.push_back(
              manipulation_kind_from_string(k.get<std::string>()));
        if (c.manipulation.kinds.empty())
          throw ConfigError("kinds must not be empty");
      }
      c.manipulation.bounds.area_min = m.value("area_min", 0.005);
      c.manipulation.bounds.area_max = m.value("area_max", 0.10);
      c.manipulation.merge_alpha = m.value("merge_alpha", 0.5);
      c.manipulation.tps_displacement_bound =
          m.value("tps_displacement_bound", 0.1);
      if (c.manipulation.bounds.area_min <= 0 ||
          c.manipulation.bounds.area_max > 0.9 ||
          c.manipulation.bounds.area_min > c.manipulation.bounds.area_max)
        throw ConfigError("area bounds invalid");
    }
  });
  guard("generate", [&] {
    if (j.contains("generate")) {
      const auto& g = j.at("generate");
      c.count_per_decoder = g.value("count_per_decoder", 20);
      if (c.count_per_decoder < 1) throw ConfigError("count must be >= 1");
      c.normals_per_decoder = g.value("normals_per_decoder", 0);
      if (c.normals_per_decoder < 0)
        throw ConfigError("normals_per_decoder must be >= 0");
      c.base_fraction = g.value("base_fraction", 1.0 / 3.0);
      if (c.base_fraction <= 0 || c.base_fraction >= 1)
        throw ConfigError("base_fraction must lie in (0,1)");
      c.generate_split = g.value("split", "base");
      if (c.generate_split != "base" && c.generate_split != "held")
        throw ConfigError("split must be base or held");
      if (g.contains("decoders")) {
        c.decoders.clear();
        for (const auto& d : g.at("decoders")) {
          const auto name = d.get<std::string>();
          if (name == "ahd") c.decoders.push_back(DecoderGroup::AHD);
          else if (name == "ahe") c.decoders.push_back(DecoderGroup::AHE);
          else throw ConfigError("decoder must be ahd or ahe");
        }
        if (c.decoders.empty()) throw ConfigError("decoders must not be empty");
      }
    }
  });
  guard("metrics", [&] {
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      c.is_splits = m.value("is_splits", 10);
      c.is_classes = m.value("is_classes", 10);
      c.tnr = m.value("tnr", 0.95);
      c.lpips_references = m.value("lpips_references", 100);
      if (c.is_splits < 1 || c.is_classes < 2)
        throw ConfigError("is_splits >= 1 and is_classes >= 2 required");
      if (c.tnr <= 0 || c.tnr >= 1) throw ConfigError("tnr must lie in (0,1)");
    }
  });
  guard("downstream", [&] {
    if (j.contains("downstream")) {
      const auto& d = j.at("downstream");
      c.downstream.base_channels = d.value("base_channels", 8);
      c.downstream.steps = d.value("steps", 200L);
      c.downstream.batch_size = d.value("batch_size", 8);
      c.downstream.learning_rate = d.value("learning_rate", 1e-3);
      c.normal_ratio = d.value("normal_ratio", 1.0);
    }
  });
  guard("output_root", [&] {
    c.output_root = j.value("output_root", std::string("runs/out"));
  });
  guard("cache_root", [&] {
    if (j.contains("cache_root") && !j.at("cache_root").is_null())
      c.cache_root = std::filesystem::path(j.at("cache_root").get<std::string>());
  });

  if (!errors.empty()) {
    std::string msg = "config validation failed:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  c.generator.input_resolution = c.resolution;
  c.generator.mode = c.mode;
  c.downstream.seed = derive_seed(c.seed, "downstream");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return from_json(j);
}

void RunConfig::validate() const {
  generator.validate();
  schedule.validate();
  weights.validate();
}

// ---- SHA-256 ----

namespace {

struct Sha256 {
  std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::uint64_t length = 0;
  unsigned char buffer[64];
  std::size_t buffered = 0;

  static std::uint32_t rotr(std::uint32_t x, int n) {
    return (x >> n) | (x << (32 - n));
  }

  void process(const unsigned char* p) {
    static const std::uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b,
        0x59f111f1, 0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01,
        0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7,
        0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc,
        0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152,
        0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
        0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
        0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819,
        0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116, 0x1e376c08,
        0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f,
        0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
        0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 =
          rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 =
          rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5],
                  g = h[6], hh = h[7];
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
      const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = s0 + maj;
      hh = g; g = f; f = e; e = d + t1;
      d = c; c = b; b = a; a = t1 + t2;
    }
    h[0] += a; h[1] += b; h[2] += c; h[3] += d;
    h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
  }

  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    length += len;
    while (len > 0) {
      const std::size_t take = std::min<std::size_t>(64 - buffered, len);
      std::memcpy(buffer + buffered, p, take);
      buffered += take;
      p += take;
      len -= take;
      if (buffered == 64) {
        process(buffer);
        buffered = 0;
      }
    }
  }

  std::string finish() {
    const std::uint64_t bits = length * 8;
    unsigned char pad = 0x80;
    update(&pad, 1);
    unsigned char zero = 0;
    while (buffered != 56) update(&zero, 1);
    unsigned char lenbuf[8];
    for (int i = 0; i < 8; ++i)
      lenbuf[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    update(lenbuf, 8);
    char hex[65];
    for (int i = 0; i < 8; ++i)
      std::snprintf(hex + 8 * i, 9, "%08x", h[i]);
    return std::string(hex, 64);
  }
};

}  // namespace

std::string sha256_hex(const void* data, std::size_t len) {
  Sha256 ctx;
  ctx.update(data, len);
  return ctx.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing file " + path.string());
  Sha256 ctx;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    ctx.update(buf, static_cast<std::size_t>(in.gcount()));
  return ctx.finish();
}

RunManifest::RunManifest(std::filesystem::path output_root)
    : root_(std::move(output_root)) {
  std::filesystem::create_directories(root_);
  std::ifstream in(path());
  if (in) {
    json j;
    in >> j;
    sections_ = j.value("sections", json::array());
  } else {
    sections_ = json::array();
  }
}

std::filesystem::path RunManifest::path() const {
  return root_ / "run_manifest.json";
}

void RunManifest::add_section(const std::string& command,
                              const json& config_echo, const json& inputs,
                              const json& outputs, double wall_seconds) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  sections_.push_back(
      {{"command", command},
       {"config", config_echo},
       {"inputs", inputs},
       {"outputs", outputs},
       {"timings", {{"wall_seconds", wall_seconds},
                    {"unix_time",
                     std::chrono::duration_cast<std::chrono::seconds>(now)
                         .count()}}}});
  save();
}

void RunManifest::save() const {
  json j{{"sections", sections_}};
  auto tmp = path();
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path());
}

}  // namespace anogen
