#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "anogen/dataset.hpp"
#include "anogen/network.hpp"

namespace anogen {

// MASK (region sampling) is the separate step below; these are the
// condition edits applied inside a sampled region.
enum class ManipulationKind { Merge, Remove, Replace, Tps };

const char* to_string(ManipulationKind kind);
ManipulationKind manipulation_kind_from_string(const std::string& name);

// Region mask plus the edit; serializable and replayable. The region is
// stored run-length encoded so manifests are self-contained.
struct ManipulationPlan {
  ImagePlane region;  // binary mask
  ManipulationKind kind = ManipulationKind::Merge;
  Scalar merge_alpha = 0.5;
  std::optional<TpsWarp> tps;  // Tps kind only
  std::uint64_t seed = 0;

  bool region_empty() const { return (region.chan(0) == 0.0).all(); }
  nlohmann::json to_json() const;
  static ManipulationPlan from_json(const nlohmann::json& j);
};

struct RegionBounds {
  Scalar area_min = 0.005;  // fraction of image pixels
  Scalar area_max = 0.10;
};

struct RegionSample {
  ImagePlane mask;
  bool used_fallback = false;
};

// Combined smoothed-noise blob from target and reference fields,
// restricted to the foreground intersection, thresholded to an exact
// pixel count inside the area bounds. Falls back to an unconstrained
// blob after 10 failed attempts.
RegionSample sample_region(const ImagePlane& target_fg,
                           const ImagePlane& reference_fg, Rng& rng,
                           const RegionBounds& bounds = {});

struct ManipulationSettings {
  std::vector<ManipulationKind> kinds = {
      ManipulationKind::Merge, ManipulationKind::Remove,
      ManipulationKind::Replace, ManipulationKind::Tps};
  RegionBounds bounds;
  Scalar merge_alpha = 0.5;
  Scalar tps_displacement_bound = 0.1;
};

ManipulationPlan sample_plan(const ImagePlane& target_fg,
                             const ImagePlane& reference_fg, std::uint64_t seed,
                             const ManipulationSettings& settings);

// Edits depth and edge inside plan.region; color and everything outside
// the region are untouched (exact pixel equality).
ConditionTriplet apply_manipulation(const ConditionTriplet& triplet,
                                    const ConditionTriplet& reference,
                                    const ManipulationPlan& plan);

struct AnomalyRecord {
  ImagePlane generated;
  ImagePlane gt_mask;
  ManipulationPlan plan;
  DecoderGroup decoder = DecoderGroup::AHD;
  std::string target_id, reference_id;
};

AnomalyRecord generate_local_anomaly(const GeneratorModel& model,
                                     const Sample& target,
                                     const Sample& reference,
                                     const ManipulationPlan& plan,
                                     DecoderGroup group);

// No manipulation; the ground-truth mask is the full foreground
// (image-level anomaly label).
std::pair<AnomalyRecord, AnomalyRecord> generate_global(
    const GeneratorModel& model, const Sample& target, const Sample& reference);

struct GenerateConfig {
  int count_per_decoder = 20;
  // Optional manipulation-free generations from normal samples, written
  // under defect "good_generated" with empty masks (normal supervision).
  int normals_per_decoder = 0;
  std::vector<DecoderGroup> decoders = {DecoderGroup::AHD, DecoderGroup::AHE};
  ManipulationSettings manipulation;
  std::uint64_t seed = 1;
};

struct ManifestRow {
  std::string image_path, mask_path;
  std::string category, defect;
  DecoderGroup decoder = DecoderGroup::AHD;
  std::string target_id, reference_id;
  ManipulationPlan plan;

  nlohmann::json to_json() const;
  static ManifestRow from_json(const nlohmann::json& j);
};

struct GenerationManifest {
  std::filesystem::path root;
  std::vector<ManifestRow> rows;
  nlohmann::json config_echo;
};

// count_per_decoder images per decoder per defect label, written as
// out_dir/<category>/<defect>/<decoder>/img_NNNN.png + mask_NNNN.png,
// plus manifest.jsonl (one plan per row) and manifest.json (summary).
GenerationManifest generate_dataset(const GeneratorModel& model,
                                    const std::vector<Sample>& base_samples,
                                    const GenerateConfig& config,
                                    const std::filesystem::path& out_dir);

GenerationManifest load_manifest(const std::filesystem::path& out_dir);

// Re-runs the generator for one manifest row (replay determinism check).
AnomalyRecord regenerate_row(const GeneratorModel& model,
                             const std::vector<Sample>& base_samples,
                             const ManifestRow& row);

// Foreground heuristic used when no mask is supplied: all-ones.
ImagePlane full_foreground(int height, int width);

}  // namespace anogen
