#include "anogen/manipulate.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "anogen/image_io.hpp"

namespace anogen {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(ManipulationKind kind) {
  switch (kind) {
    case ManipulationKind::Merge: return "merge";
    case ManipulationKind::Remove: return "remove";
    case ManipulationKind::Replace: return "replace";
    case ManipulationKind::Tps: return "tps";
  }
  return "?";
}

ManipulationKind manipulation_kind_from_string(const std::string& name) {
  if (name == "merge") return ManipulationKind::Merge;
  if (name == "remove") return ManipulationKind::Remove;
  if (name == "replace") return ManipulationKind::Replace;
  if (name == "tps") return ManipulationKind::Tps;
  throw ParameterError("unknown manipulation kind: " + name);
}

namespace {

// Run-length encoding of a binary mask, scanline order: counts of
// alternating zero/one runs starting with zeros.
json rle_encode(const ImagePlane& mask) {
  std::vector<long> runs;
  long run = 0;
  Scalar current = 0;
  const auto& ch = mask.chan(0);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      const Scalar v = ch(y, x) > 0 ? 1 : 0;
      if (v == current) {
        ++run;
      } else {
        runs.push_back(run);
        current = v;
        run = 1;
      }
    }
  runs.push_back(run);
  return json{{"h", mask.height()}, {"w", mask.width()}, {"runs", runs}};
}

ImagePlane rle_decode(const json& j) {
  const int h = j.at("h").get<int>(), w = j.at("w").get<int>();
  ImagePlane mask(h, w, PlaneRole::Mask, RangeTag::Binary);
  Scalar current = 0;
  long at = 0;
  for (const auto& run : j.at("runs")) {
    const long n = run.get<long>();
    for (long i = 0; i < n; ++i, ++at)
      mask.chan(0)(static_cast<int>(at / w), static_cast<int>(at % w)) = current;
    current = current > 0 ? 0 : 1;
  }
  if (at != static_cast<long>(h) * w)
    throw InputError("rle mask does not cover the raster");
  return mask;
}

}  // namespace

json ManipulationPlan::to_json() const {
  json j{{"kind", anogen::to_string(kind)},
         {"merge_alpha", merge_alpha},
         {"seed", seed},
         {"region", rle_encode(region)}};
  if (tps) {
    json cp = json::array(), dp = json::array();
    for (int i = 0; i < TpsWarp::kPoints; ++i) {
      cp.push_back({tps->control_points(i, 0), tps->control_points(i, 1)});
      dp.push_back({tps->displacements(i, 0), tps->displacements(i, 1)});
    }
    j["tps"] = json{{"region",
                     {{"x0", tps->region.x0},
                      {"y0", tps->region.y0},
                      {"x1", tps->region.x1},
                      {"y1", tps->region.y1}}},
                    {"control_points", cp},
                    {"displacements", dp},
                    {"bound", tps->displacement_bound}};
  }
  return j;
}

ManipulationPlan ManipulationPlan::from_json(const json& j) {
  ManipulationPlan plan;
  plan.kind = manipulation_kind_from_string(j.at("kind").get<std::string>());
  plan.merge_alpha = j.at("merge_alpha").get<Scalar>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.region = rle_decode(j.at("region"));
  if (j.contains("tps")) {
    TpsWarp warp;
    const auto& t = j.at("tps");
    warp.region = RegionBox{t.at("region").at("x0").get<Scalar>(),
                            t.at("region").at("y0").get<Scalar>(),
                            t.at("region").at("x1").get<Scalar>(),
                            t.at("region").at("y1").get<Scalar>()};
    warp.displacement_bound = t.at("bound").get<Scalar>();
    for (int i = 0; i < TpsWarp::kPoints; ++i) {
      warp.control_points(i, 0) = t.at("control_points").at(i).at(0).get<Scalar>();
      warp.control_points(i, 1) = t.at("control_points").at(i).at(1).get<Scalar>();
      warp.displacements(i, 0) = t.at("displacements").at(i).at(0).get<Scalar>();
      warp.displacements(i, 1) = t.at("displacements").at(i).at(1).get<Scalar>();
    }
    plan.tps = warp;
  }
  return plan;
}

ImagePlane full_foreground(int height, int width) {
  return ImagePlane(height, width, PlaneRole::Mask, RangeTag::Binary, 1.0);
}

namespace {

// Smoothed random field in [0,1]: low-res uniform grid, bilinear
// upsample, light blur. Perlin-like blobs appear after thresholding.
ImagePlane noise_field(int h, int w, Rng& rng) {
  const int gh = std::max(3, h / 8), gw = std::max(3, w / 8);
  ImagePlane grid(gh, gw, PlaneRole::Mask, RangeTag::Unit);
  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x) grid.chan(0)(y, x) = uniform01(rng);
  ImagePlane field = resize_bilinear(grid, h, w);
  field = gaussian_blur(field, std::max(1.0, h / 32.0));
  return field;
}

ImagePlane maybe_flip(const ImagePlane& plane, Rng& rng) {
  return flip(plane, uniform01(rng) < 0.5, uniform01(rng) < 0.5);
}

// Threshold `field` to exactly `count` pixels among candidates.
ImagePlane threshold_to_count(const ImagePlane& field,
                              const ImagePlane* candidates, long count) {
  const int h = field.height(), w = field.width();
  std::vector<std::pair<Scalar, long>> vals;
  vals.reserve(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!candidates || candidates->chan(0)(y, x) > 0)
        vals.emplace_back(field.chan(0)(y, x), static_cast<long>(y) * w + x);
  ImagePlane mask(h, w, PlaneRole::Mask, RangeTag::Binary, 0.0);
  if (static_cast<long>(vals.size()) < count) return mask;  // caller checks
  std::nth_element(vals.begin(), vals.begin() + count, vals.end(),
                   [](const auto& a, const auto& b) {
                     return a.first > b.first ||
                            (a.first == b.first && a.second < b.second);
                   });
  for (long i = 0; i < count; ++i) {
    const long at = vals[static_cast<std::size_t>(i)].second;
    mask.chan(0)(static_cast<int>(at / w), static_cast<int>(at % w)) = 1.0;
  }
  return mask;
}

}  // namespace

RegionSample sample_region(const ImagePlane& target_fg,
                           const ImagePlane& reference_fg, Rng& rng,
                           const RegionBounds& bounds) {
  if (!target_fg.same_shape(reference_fg))
    throw DimensionError("sample_region: foreground masks disagree on shape");
  const int h = target_fg.height(), w = target_fg.width();
  const long total = static_cast<long>(h) * w;

  ImagePlane candidates(h, w, PlaneRole::Mask, RangeTag::Binary);
  candidates.chan(0) =
      ((target_fg.chan(0) > 0.0) && (reference_fg.chan(0) > 0.0)).cast<Scalar>();
  const long fg_count = static_cast<long>((candidates.chan(0) > 0.0).count());

  RegionSample out;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const Scalar area = uniform(rng, bounds.area_min, bounds.area_max);
    const long count =
        std::max<long>(1, static_cast<long>(std::lround(area * total)));
    ImagePlane field(h, w, PlaneRole::Mask, RangeTag::Unit, 0.0);
    const ImagePlane ft = maybe_flip(noise_field(h, w, rng), rng);
    const ImagePlane fr = maybe_flip(noise_field(h, w, rng), rng);
    field.chan(0) = ft.chan(0).max(fr.chan(0));
    if (fg_count >= count) {
      out.mask = threshold_to_count(field, &candidates, count);
      return out;
    }
  }
  std::cerr << "[anogen] region sampler: foreground too small, "
               "falling back to unconstrained blob\n";
  out.used_fallback = true;
  const Scalar area = 0.5 * (bounds.area_min + bounds.area_max);
  const long count =
      std::max<long>(1, static_cast<long>(std::lround(area * total)));
  out.mask = threshold_to_count(noise_field(h, w, rng), nullptr, count);
  return out;
}

ManipulationPlan sample_plan(const ImagePlane& target_fg,
                             const ImagePlane& reference_fg, std::uint64_t seed,
                             const ManipulationSettings& settings) {
  if (settings.kinds.empty())
    throw ConfigError("no manipulation kinds enabled");
  Rng rng(seed);
  ManipulationPlan plan;
  plan.seed = seed;
  plan.kind = settings.kinds[static_cast<std::size_t>(uniform_int(
      rng, 0, static_cast<int>(settings.kinds.size()) - 1))];
  plan.merge_alpha = settings.merge_alpha;
  RegionSample region = sample_region(target_fg, reference_fg, rng, settings.bounds);
  plan.region = std::move(region.mask);

  if (plan.kind == ManipulationKind::Tps) {
    // Warp box: the region's bounding box, padded a little.
    const auto& m = plan.region.chan(0);
    int y0 = plan.region.height(), y1 = -1, x0 = plan.region.width(), x1 = -1;
    for (int y = 0; y < plan.region.height(); ++y)
      for (int x = 0; x < plan.region.width(); ++x)
        if (m(y, x) > 0) {
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
        }
    RegionBox box{static_cast<Scalar>(std::max(0, x0 - 2)),
                  static_cast<Scalar>(std::max(0, y0 - 2)),
                  static_cast<Scalar>(std::min(plan.region.width() - 1, x1 + 2)),
                  static_cast<Scalar>(std::min(plan.region.height() - 1, y1 + 2))};
    if (box.width() < 8) box.x1 = std::min<Scalar>(plan.region.width() - 1, box.x0 + 8);
    if (box.height() < 8) box.y1 = std::min<Scalar>(plan.region.height() - 1, box.y0 + 8);
    Eigen::Matrix<Scalar, TpsWarp::kPoints, 2> disp;
    for (int i = 0; i < TpsWarp::kPoints; ++i) {
      disp(i, 0) = uniform(rng, -settings.tps_displacement_bound,
                           settings.tps_displacement_bound);
      disp(i, 1) = uniform(rng, -settings.tps_displacement_bound,
                           settings.tps_displacement_bound);
    }
    plan.tps = TpsWarp::make_grid(box, disp, 0.2, settings.tps_displacement_bound);
  }
  return plan;
}

namespace {

void edit_plane(ImagePlane& plane, const ImagePlane& reference,
                const ImagePlane& region, const ManipulationPlan& plan) {
  const auto& r = region.chan(0);
  auto& p = plane.chan(0);
  const auto& q = reference.chan(0);
  switch (plan.kind) {
    case ManipulationKind::Merge:
      p = (r > 0.0).select((1 - plan.merge_alpha) * p + plan.merge_alpha * q, p);
      break;
    case ManipulationKind::Remove: {
      const Scalar bg = border_median(plane);
      p = (r > 0.0).select(bg, p);
      break;
    }
    case ManipulationKind::Replace:
      p = (r > 0.0).select(q, p);
      break;
    case ManipulationKind::Tps: {
      if (!plan.tps) throw ParameterError("tps plan missing warp");
      const ImagePlane warped = apply_warp(plane, *plan.tps);
      p = (r > 0.0).select(warped.chan(0), p);
      break;
    }
  }
}

}  // namespace

ConditionTriplet apply_manipulation(const ConditionTriplet& triplet,
                                    const ConditionTriplet& reference,
                                    const ManipulationPlan& plan) {
  triplet.validate();
  reference.validate();
  if (!triplet.color.same_shape(reference.color) ||
      !triplet.color.same_shape(plan.region))
    throw DimensionError("apply_manipulation: shape mismatch");
  ConditionTriplet out = triplet;
  edit_plane(out.depth, reference.depth, plan.region, plan);
  edit_plane(out.edge, reference.edge, plan.region, plan);
  return out;
}

AnomalyRecord generate_local_anomaly(const GeneratorModel& model,
                                     const Sample& target,
                                     const Sample& reference,
                                     const ManipulationPlan& plan,
                                     DecoderGroup group) {
  ConditionTriplet manipulated =
      apply_manipulation(target.conditions, reference.conditions, plan);
  // Appearance comes from the reference color; structure from the
  // (manipulated) target depth and edge.
  ConditionTriplet input;
  input.color = reference.conditions.color;
  input.depth = manipulated.depth;
  input.edge = manipulated.edge;

  GenerationResult result = run_generator(model, input, group);
  AnomalyRecord record;
  record.generated = convert_range(result.fused, RangeTag::Unit);
  record.gt_mask = plan.region;
  record.plan = plan;
  record.decoder = group;
  record.target_id = target.id;
  record.reference_id = reference.id;
  return record;
}

std::pair<AnomalyRecord, AnomalyRecord> generate_global(
    const GeneratorModel& model, const Sample& target,
    const Sample& reference) {
  ManipulationPlan noop;
  noop.kind = ManipulationKind::Replace;
  noop.region = ImagePlane(target.conditions.height(),
                           target.conditions.width(), PlaneRole::Mask,
                           RangeTag::Binary, 0.0);
  AnomalyRecord ahd = generate_local_anomaly(model, target, reference, noop,
                                             DecoderGroup::AHD);
  AnomalyRecord ahe = generate_local_anomaly(model, target, reference, noop,
                                             DecoderGroup::AHE);
  const ImagePlane fg =
      full_foreground(target.conditions.height(), target.conditions.width());
  ahd.gt_mask = fg;
  ahe.gt_mask = fg;
  return {std::move(ahd), std::move(ahe)};
}

json ManifestRow::to_json() const {
  return json{{"image", image_path},
              {"mask", mask_path},
              {"category", category},
              {"defect", defect},
              {"decoder", anogen::to_string(decoder)},
              {"target_id", target_id},
              {"reference_id", reference_id},
              {"plan", plan.to_json()}};
}

ManifestRow ManifestRow::from_json(const json& j) {
  ManifestRow row;
  row.image_path = j.at("image").get<std::string>();
  row.mask_path = j.at("mask").get<std::string>();
  row.category = j.at("category").get<std::string>();
  row.defect = j.at("defect").get<std::string>();
  row.decoder = j.at("decoder").get<std::string>() == "ahd" ? DecoderGroup::AHD
                                                            : DecoderGroup::AHE;
  row.target_id = j.at("target_id").get<std::string>();
  row.reference_id = j.at("reference_id").get<std::string>();
  row.plan = ManipulationPlan::from_json(j.at("plan"));
  return row;
}

namespace {

const Sample* find_sample(const std::vector<Sample>& samples,
                          const std::string& id) {
  for (const auto& s : samples)
    if (s.id == id) return &s;
  throw InputError("manifest references unknown sample id: " + id);
}

}  // namespace

GenerationManifest generate_dataset(const GeneratorModel& model,
                                    const std::vector<Sample>& base_samples,
                                    const GenerateConfig& config,
                                    const fs::path& out_dir) {
  if (base_samples.empty())
    throw InputError("generate_dataset needs a nonempty base set");

  // Group samples by (category, defect); normal samples double as the
  // reference appearance pool.
  std::map<std::pair<std::string, std::string>, std::vector<const Sample*>> groups;
  std::map<std::string, std::vector<const Sample*>> normals;
  for (const auto& s : base_samples) {
    groups[{s.category, s.defect_label}].push_back(&s);
    if (s.defect_label == "good") normals[s.category].push_back(&s);
  }

  fs::create_directories(out_dir);
  GenerationManifest manifest;
  manifest.root = out_dir;
  manifest.config_echo = json{{"count_per_decoder", config.count_per_decoder},
                              {"seed", config.seed}};

  std::ofstream rows_out(out_dir / "manifest.jsonl", std::ios::trunc);
  if (!rows_out) throw IoError("cannot write manifest in " + out_dir.string());

  for (const auto& [key, samples] : groups) {
    const auto& [category, defect] = key;
    const std::vector<const Sample*>& refs =
        normals.count(category) && !normals[category].empty()
            ? normals[category]
            : samples;
    for (DecoderGroup group : config.decoders) {
      const fs::path dir = out_dir / category / defect / to_string(group);
      fs::create_directories(dir);
      for (int i = 0; i < config.count_per_decoder; ++i) {
        const std::uint64_t item_seed = derive_seed(
            config.seed, "generate/" + category + "/" + defect + "/" +
                             to_string(group),
            static_cast<std::uint64_t>(i));
        Rng rng(item_seed);
        const Sample& target = *samples[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<int>(samples.size()) - 1))];
        const Sample& reference = *refs[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<int>(refs.size()) - 1))];

        const ImagePlane tfg = full_foreground(target.conditions.height(),
                                               target.conditions.width());
        ManipulationPlan plan =
            sample_plan(tfg, tfg, rng(), config.manipulation);
        AnomalyRecord record =
            generate_local_anomaly(model, target, reference, plan, group);

        char img_name[32], mask_name[32];
        std::snprintf(img_name, sizeof(img_name), "img_%04d.png", i);
        std::snprintf(mask_name, sizeof(mask_name), "mask_%04d.png", i);
        save_png8(record.generated, dir / img_name);
        save_png8(record.gt_mask, dir / mask_name);

        ManifestRow row;
        row.image_path =
            (fs::path(category) / defect / to_string(group) / img_name).string();
        row.mask_path =
            (fs::path(category) / defect / to_string(group) / mask_name).string();
        row.category = category;
        row.defect = defect;
        row.decoder = group;
        row.target_id = target.id;
        row.reference_id = reference.id;
        row.plan = record.plan;
        rows_out << row.to_json().dump() << "\n";
        if (!rows_out)
          throw IoError("manifest write failed (disk full?): partial rows kept");
        manifest.rows.push_back(std::move(row));
      }
    }
  }
  if (config.normals_per_decoder > 0) {
    for (const auto& [category, refs] : normals) {
      if (refs.empty()) continue;
      for (DecoderGroup group : config.decoders) {
        const fs::path dir =
            out_dir / category / "good_generated" / to_string(group);
        fs::create_directories(dir);
        for (int i = 0; i < config.normals_per_decoder; ++i) {
          Rng rng(derive_seed(config.seed, "generate-normal/" + category + "/" +
                                               to_string(group),
                              static_cast<std::uint64_t>(i)));
          const Sample& target = *refs[static_cast<std::size_t>(
              uniform_int(rng, 0, static_cast<int>(refs.size()) - 1))];
          const Sample& reference = *refs[static_cast<std::size_t>(
              uniform_int(rng, 0, static_cast<int>(refs.size()) - 1))];
          ManipulationPlan noop;
          noop.kind = ManipulationKind::Replace;
          noop.seed = rng();
          noop.region = ImagePlane(target.conditions.height(),
                                   target.conditions.width(), PlaneRole::Mask,
                                   RangeTag::Binary, 0.0);
          AnomalyRecord record =
              generate_local_anomaly(model, target, reference, noop, group);
          char img_name[32], mask_name[32];
          std::snprintf(img_name, sizeof(img_name), "img_%04d.png", i);
          std::snprintf(mask_name, sizeof(mask_name), "mask_%04d.png", i);
          save_png8(record.generated, dir / img_name);
          save_png8(record.gt_mask, dir / mask_name);
          ManifestRow row;
          row.image_path = (fs::path(category) / "good_generated" /
                            to_string(group) / img_name)
                               .string();
          row.mask_path = (fs::path(category) / "good_generated" /
                           to_string(group) / mask_name)
                              .string();
          row.category = category;
          row.defect = "good_generated";
          row.decoder = group;
          row.target_id = target.id;
          row.reference_id = reference.id;
          row.plan = record.plan;
          rows_out << row.to_json().dump() << "\n";
          manifest.rows.push_back(std::move(row));
        }
      }
    }
  }
  rows_out.close();

  json summary{{"rows", manifest.rows.size()},
               {"config", manifest.config_echo}};
  std::ofstream summary_out(out_dir / "manifest.json", std::ios::trunc);
  summary_out << summary.dump(2) << "\n";
  return manifest;
}

GenerationManifest load_manifest(const fs::path& out_dir) {
  GenerationManifest manifest;
  manifest.root = out_dir;
  std::ifstream in(out_dir / "manifest.jsonl");
  if (!in) throw IoError("no manifest.jsonl under " + out_dir.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    manifest.rows.push_back(ManifestRow::from_json(json::parse(line)));
  }
  return manifest;
}

AnomalyRecord regenerate_row(const GeneratorModel& model,
                             const std::vector<Sample>& base_samples,
                             const ManifestRow& row) {
  const Sample* target = find_sample(base_samples, row.target_id);
  const Sample* reference = find_sample(base_samples, row.reference_id);
  return generate_local_anomaly(model, *target, *reference, row.plan,
                                row.decoder);
}

}  // namespace anogen
