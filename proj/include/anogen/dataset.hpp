#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "anogen/augment.hpp"
#include "anogen/conditioning.hpp"
#include "anogen/triplet.hpp"

namespace anogen {

enum class DatasetKind { MvtecLayout, RgbdLayout, FlatClassLayout };

const char* to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

struct SampleEntry {
  std::string id;  // category/split/defect/stem
  std::filesystem::path color_path;
  std::optional<std::filesystem::path> depth_path;  // rgbd layouts only
  std::optional<std::filesystem::path> gt_mask_path;
  std::string defect_label;  // "good" means normal
  bool is_train = false;
};

struct CategoryRecord {
  std::string name;
  std::vector<SampleEntry> train;
  std::vector<SampleEntry> test;
};

struct DatasetIndex {
  DatasetKind kind = DatasetKind::MvtecLayout;
  std::filesystem::path root;
  std::vector<CategoryRecord> categories;

  std::size_t sample_count() const;
  std::vector<const SampleEntry*> all_entries() const;
};

// Deterministic directory scan: sorted paths, labels from directory
// names. Empty categories are skipped with a warning.
DatasetIndex scan(const std::filesystem::path& root, DatasetKind kind);

// Per-defect-type split: ceil(fraction*n) samples of each defect land in
// the base set, the rest are held out. Deterministic under seed; the
// two halves partition the input.
std::pair<DatasetIndex, DatasetIndex> split_base_set(const DatasetIndex& index,
                                                     Scalar fraction,
                                                     std::uint64_t seed);

struct Sample {
  std::string id;
  ConditionTriplet conditions;
  std::optional<ImagePlane> real_depth;
  std::optional<ImagePlane> gt_mask;
  std::string defect_label;
  std::string category;
};

// Cache of computed condition planes keyed by sample id and extractor
// version. Planes round-trip bit-exactly (raw float64 container).
// Writes go to a temp file and rename into place.
class ConditionCache {
 public:
  ConditionCache(std::filesystem::path root, std::string version);

  std::optional<ImagePlane> load(const std::string& sample_id,
                                 PlaneRole role) const;
  void store(const std::string& sample_id, const ImagePlane& plane);
  const std::string& version() const { return version_; }

 private:
  std::filesystem::path entry_path(const std::string& sample_id,
                                   PlaneRole role) const;
  void load_manifest();
  void save_manifest() const;

  std::filesystem::path root_;
  std::string version_;
  std::vector<std::string> entries_;
};

struct LoaderConfig {
  int resolution = 256;
  std::optional<std::filesystem::path> cache_root;
};

// Loads one sample: color (and real depth / gt mask when present) from
// disk, resized to the working resolution, with edge and pseudo-depth
// conditions computed through the backend or served from the cache.
class SampleLoader {
 public:
  SampleLoader(ConditioningBackend backend, LoaderConfig config);

  Sample load(const SampleEntry& entry, const std::string& category) const;

  // Streams every sample in the index; unreadable images are skipped
  // with a logged error.
  std::vector<Sample> load_all(const DatasetIndex& index) const;

 private:
  ConditioningBackend backend_;
  LoaderConfig config_;
  mutable std::optional<ConditionCache> cache_;
};

}  // namespace anogen
