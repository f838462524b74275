#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "anogen/downstream.hpp"
#include "anogen/training.hpp"

namespace anogen {

// Single config file drives every command; CLI flags override individual
// keys. The parsed struct re-serializes verbatim into run manifests.
struct RunConfig {
  std::filesystem::path dataset_root;
  DatasetKind dataset_kind = DatasetKind::MvtecLayout;
  GenerationMode mode = GenerationMode::RgbLevel;
  int resolution = 256;
  std::uint64_t seed = 1;

  std::string conditioning_backend = "fallback";
  Scalar edge_sigma = 1.0;
  Scalar depth_sigma = 1.0;

  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainSchedule schedule;
  LossWeights weights;
  AugmentationConfig augment;

  ManipulationSettings manipulation;
  int count_per_decoder = 20;
  int normals_per_decoder = 0;
  std::vector<DecoderGroup> decoders = {DecoderGroup::AHD, DecoderGroup::AHE};
  Scalar base_fraction = 1.0 / 3.0;
  std::string generate_split = "base";  // base | held

  int is_splits = 10;
  int is_classes = 10;
  Scalar tnr = 0.95;
  int lpips_references = 100;

  DownstreamConfig downstream;
  Scalar normal_ratio = 1.0;  // generated normals : anomalies for AnoHybrid+

  std::filesystem::path output_root = "runs/out";
  std::optional<std::filesystem::path> cache_root;

  nlohmann::json to_json() const;
  // Throws ConfigError listing every invalid field.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void validate() const;
};

// SHA-256 of a file / buffer, hex encoded (content identity for the run
// manifest).
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_file(const std::filesystem::path& path);

// Append-only per-command sections under <output_root>/run_manifest.json.
class RunManifest {
 public:
  explicit RunManifest(std::filesystem::path output_root);

  void add_section(const std::string& command, const nlohmann::json& config_echo,
                   const nlohmann::json& inputs, const nlohmann::json& outputs,
                   double wall_seconds);
  const nlohmann::json& sections() const { return sections_; }
  std::filesystem::path path() const;

 private:
  void save() const;
  std::filesystem::path root_;
  nlohmann::json sections_;
};

}  // namespace anogen
