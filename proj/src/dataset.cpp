#include "anogen/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "anogen/image_io.hpp"
#include "anogen/rng.hpp"

namespace anogen {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::MvtecLayout: return "mvtec_layout";
    case DatasetKind::RgbdLayout: return "rgbd_layout";
    case DatasetKind::FlatClassLayout: return "flat_class_layout";
  }
  return "?";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "mvtec_layout") return DatasetKind::MvtecLayout;
  if (name == "rgbd_layout") return DatasetKind::RgbdLayout;
  if (name == "flat_class_layout") return DatasetKind::FlatClassLayout;
  throw ConfigError("unknown dataset kind: " + name);
}

std::size_t DatasetIndex::sample_count() const {
  std::size_t n = 0;
  for (const auto& cat : categories) n += cat.train.size() + cat.test.size();
  return n;
}

std::vector<const SampleEntry*> DatasetIndex::all_entries() const {
  std::vector<const SampleEntry*> out;
  for (const auto& cat : categories) {
    for (const auto& e : cat.train) out.push_back(&e);
    for (const auto& e : cat.test) out.push_back(&e);
  }
  return out;
}

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

bool is_depth_sibling(const fs::path& p) {
  const std::string stem = p.stem().string();
  return stem.size() > 6 && stem.substr(stem.size() - 6) == "_depth";
}

std::vector<fs::path> sorted_images(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path()) &&
        !is_depth_sibling(e.path()))
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> sorted_dirs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<fs::path> find_depth_sibling(const fs::path& color) {
  fs::path cand = color.parent_path() / (color.stem().string() + "_depth.png");
  if (fs::exists(cand)) return cand;
  return std::nullopt;
}

std::optional<fs::path> find_gt_mask(const fs::path& category_root,
                                     const std::string& defect,
                                     const fs::path& color) {
  const fs::path dir = category_root / "ground_truth" / defect;
  for (const char* suffix : {"_mask.png", ".png"}) {
    fs::path cand = dir / (color.stem().string() + suffix);
    if (fs::exists(cand)) return cand;
  }
  return std::nullopt;
}

SampleEntry make_entry(const std::string& category, const std::string& split,
                       const std::string& defect, const fs::path& color,
                       bool with_depth, const fs::path& category_root) {
  SampleEntry entry;
  entry.id = category + "/" + split + "/" + defect + "/" + color.stem().string();
  entry.color_path = color;
  entry.defect_label = defect;
  entry.is_train = split == "train";
  if (with_depth) entry.depth_path = find_depth_sibling(color);
  if (split == "test" && defect != "good")
    entry.gt_mask_path = find_gt_mask(category_root, defect, color);
  return entry;
}

void scan_mvtec_category(const fs::path& cat_dir, bool with_depth,
                         CategoryRecord& record) {
  for (const auto& good_dir : sorted_dirs(cat_dir / "train"))
    for (const auto& img : sorted_images(good_dir))
      record.train.push_back(make_entry(record.name, "train",
                                        good_dir.filename().string(), img,
                                        with_depth, cat_dir));
  for (const auto& defect_dir : sorted_dirs(cat_dir / "test"))
    for (const auto& img : sorted_images(defect_dir))
      record.test.push_back(make_entry(record.name, "test",
                                       defect_dir.filename().string(), img,
                                       with_depth, cat_dir));
}

}  // namespace

DatasetIndex scan(const fs::path& root, DatasetKind kind) {
  if (!fs::is_directory(root))
    throw IoError("dataset root does not exist: " + root.string());
  DatasetIndex index;
  index.kind = kind;
  index.root = root;

  if (kind == DatasetKind::FlatClassLayout) {
    CategoryRecord record;
    record.name = root.filename().string();
    for (const auto& class_dir : sorted_dirs(root)) {
      const std::string label = class_dir.filename().string();
      for (const auto& img : sorted_images(class_dir)) {
        SampleEntry entry;
        entry.id = record.name + "/train/" + label + "/" + img.stem().string();
        entry.color_path = img;
        entry.defect_label = label;
        entry.is_train = true;
        record.train.push_back(entry);
      }
    }
    if (record.train.empty()) {
      std::cerr << "[anogen] flat layout at " << root << " has no images\n";
    } else {
      index.categories.push_back(std::move(record));
    }
    return index;
  }

  const bool with_depth = kind == DatasetKind::RgbdLayout;
  for (const auto& cat_dir : sorted_dirs(root)) {
    CategoryRecord record;
    record.name = cat_dir.filename().string();
    scan_mvtec_category(cat_dir, with_depth, record);
    if (record.train.empty() && record.test.empty()) {
      std::cerr << "[anogen] skipping empty category " << record.name << "\n";
      continue;
    }
    index.categories.push_back(std::move(record));
  }
  return index;
}

std::pair<DatasetIndex, DatasetIndex> split_base_set(const DatasetIndex& index,
                                                     Scalar fraction,
                                                     std::uint64_t seed) {
  if (fraction <= 0 || fraction >= 1)
    throw ParameterError("split fraction must lie in (0,1)");
  DatasetIndex base = index, held = index;
  for (auto& cat : base.categories) cat.train.clear(), cat.test.clear();
  for (auto& cat : held.categories) cat.train.clear(), cat.test.clear();

  for (std::size_t ci = 0; ci < index.categories.size(); ++ci) {
    const auto& cat = index.categories[ci];
    auto split_list = [&](const std::vector<SampleEntry>& entries,
                          std::vector<SampleEntry>& base_out,
                          std::vector<SampleEntry>& held_out) {
      // Group by defect label, shuffle each group with a label-derived
      // seed, then take the leading ceil(fraction*n).
      std::vector<std::string> labels;
      for (const auto& e : entries)
        if (std::find(labels.begin(), labels.end(), e.defect_label) ==
            labels.end())
          labels.push_back(e.defect_label);
      for (const auto& label : labels) {
        std::vector<SampleEntry> group;
        for (const auto& e : entries)
          if (e.defect_label == label) group.push_back(e);
        Rng rng = make_rng(seed, "split/" + cat.name + "/" + label);
        std::shuffle(group.begin(), group.end(), rng);
        const auto n = group.size();
        auto take = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<Scalar>(n)));
        if (n == 1) {
          std::cerr << "[anogen] defect '" << label << "' in category '"
                    << cat.name << "' has a single sample; assigning to base\n";
          take = 1;
        }
        for (std::size_t i = 0; i < n; ++i)
          (i < take ? base_out : held_out).push_back(group[i]);
      }
    };
    split_list(cat.train, base.categories[ci].train, held.categories[ci].train);
    split_list(cat.test, base.categories[ci].test, held.categories[ci].test);
  }
  return {base, held};
}

ConditionCache::ConditionCache(fs::path root, std::string version)
    : root_(std::move(root)), version_(std::move(version)) {
  fs::create_directories(root_);
  load_manifest();
}

fs::path ConditionCache::entry_path(const std::string& sample_id,
                                    PlaneRole role) const {
  std::string key = sample_id;
  std::replace(key.begin(), key.end(), '/', '_');
  return root_ / (key + "." + to_string(role) + ".plane");
}

void ConditionCache::load_manifest() {
  entries_.clear();
  const fs::path manifest = root_ / "cache_manifest.json";
  if (!fs::exists(manifest)) return;
  std::ifstream in(manifest);
  json j;
  in >> j;
  if (j.value("version", std::string{}) != version_) {
    // Version bump invalidates everything.
    return;
  }
  for (const auto& e : j.at("entries")) entries_.push_back(e.get<std::string>());
}

void ConditionCache::save_manifest() const {
  json j{{"version", version_}, {"entries", entries_}};
  const fs::path manifest = root_ / "cache_manifest.json";
  fs::path tmp = manifest;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, manifest);
}

std::optional<ImagePlane> ConditionCache::load(const std::string& sample_id,
                                               PlaneRole role) const {
  const std::string key = sample_id + ":" + to_string(role);
  if (std::find(entries_.begin(), entries_.end(), key) == entries_.end())
    return std::nullopt;
  const fs::path path = entry_path(sample_id, role);
  if (!fs::exists(path)) return std::nullopt;
  return load_raw_plane(path);
}

void ConditionCache::store(const std::string& sample_id,
                           const ImagePlane& plane) {
  save_raw_plane(plane, entry_path(sample_id, plane.role));
  const std::string key = sample_id + ":" + to_string(plane.role);
  if (std::find(entries_.begin(), entries_.end(), key) == entries_.end())
    entries_.push_back(key);
  save_manifest();
}

SampleLoader::SampleLoader(ConditioningBackend backend, LoaderConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  if (config_.cache_root)
    cache_.emplace(*config_.cache_root, backend_.version());
}

Sample SampleLoader::load(const SampleEntry& entry,
                          const std::string& category) const {
  const int res = config_.resolution;
  Sample sample;
  sample.id = entry.id;
  sample.defect_label = entry.defect_label;
  sample.category = category;

  ImagePlane color = load_color_image(entry.color_path);
  if (color.height() != res || color.width() != res)
    color = resize_bilinear(color, res, res);
  sample.conditions.color = color;

  auto cached_or_compute = [&](PlaneRole role) -> ImagePlane {
    if (cache_) {
      if (auto hit = cache_->load(entry.id, role)) return *hit;
    }
    ImagePlane plane = role == PlaneRole::Edge ? backend_.edge->extract(color)
                                               : backend_.depth->estimate(color);
    if (cache_) cache_->store(entry.id, plane);
    return plane;
  };
  sample.conditions.edge = cached_or_compute(PlaneRole::Edge);
  sample.conditions.depth = cached_or_compute(PlaneRole::Depth);

  if (entry.depth_path) {
    ImagePlane d = load_gray_image(*entry.depth_path, PlaneRole::Depth);
    if (d.height() != res || d.width() != res) d = resize_bilinear(d, res, res);
    sample.real_depth = std::move(d);
  }
  if (entry.gt_mask_path) {
    ImagePlane m = load_gray_image(*entry.gt_mask_path, PlaneRole::Mask);
    if (m.height() != res || m.width() != res) m = resize_nearest(m, res, res);
    m.chan(0) = (m.chan(0) > 0.0).cast<Scalar>();
    m.range_tag = RangeTag::Binary;
    sample.gt_mask = std::move(m);
  }
  return sample;
}

std::vector<Sample> SampleLoader::load_all(const DatasetIndex& index) const {
  std::vector<Sample> out;
  for (const auto& cat : index.categories) {
    for (const auto* list : {&cat.train, &cat.test}) {
      for (const auto& entry : *list) {
        try {
          out.push_back(load(entry, cat.name));
        } catch (const IoError& err) {
          std::cerr << "[anogen] skipping unreadable sample " << entry.id
                    << ": " << err.what() << "\n";
        }
      }
    }
  }
  return out;
}

}  // namespace anogen
