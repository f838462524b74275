#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "anogen/config.hpp"
#include "anogen/downstream.hpp"
#include "anogen/image_io.hpp"
#include "anogen/toy_data.hpp"

namespace anogen {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct PrereqError : std::runtime_error {
  PrereqError(const std::string& what, const std::string& producing_command)
      : std::runtime_error(what + " (produce it with: anogen " +
                           producing_command + ")") {}
};

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> decoders;
  std::optional<std::string> manipulations;
  std::optional<std::string> out;
  std::optional<std::string> split;
};

RunConfig load_config(const CliOverrides& cli) {
  RunConfig config = RunConfig::load(cli.config_path);
  if (cli.seed) config.seed = *cli.seed;
  if (cli.mode) {
    if (*cli.mode != "rgb" && *cli.mode != "depth")
      throw ConfigError("--mode must be rgb or depth");
    config.mode = *cli.mode == "rgb" ? GenerationMode::RgbLevel
                                     : GenerationMode::DepthLevel;
    config.generator.mode = config.mode;
  }
  if (cli.decoders) {
    config.decoders.clear();
    if (*cli.decoders == "ahd") config.decoders = {DecoderGroup::AHD};
    else if (*cli.decoders == "ahe") config.decoders = {DecoderGroup::AHE};
    else if (*cli.decoders == "both")
      config.decoders = {DecoderGroup::AHD, DecoderGroup::AHE};
    else throw ConfigError("--decoders must be ahd, ahe or both");
  }
  if (cli.manipulations) {
    config.manipulation.kinds.clear();
    std::stringstream ss(*cli.manipulations);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty())
        config.manipulation.kinds.push_back(
            manipulation_kind_from_string(item));
    if (config.manipulation.kinds.empty())
      throw ConfigError("--manipulations must name at least one kind");
  }
  if (cli.split) {
    if (*cli.split != "base" && *cli.split != "held")
      throw ConfigError("--split must be base or held");
    config.generate_split = *cli.split;
  }
  if (const char* env = std::getenv("ANOGEN_CACHE_ROOT"))
    config.cache_root = fs::path(env);
  config.validate();
  return config;
}

fs::path cache_root_for(const RunConfig& config) {
  return config.cache_root ? *config.cache_root
                           : config.output_root / "cache";
}

fs::path checkpoint_path(const RunConfig& config, GenerationMode mode) {
  return config.output_root / "checkpoints" /
         (std::string(to_string(mode)) + ".bin");
}

fs::path generated_dir(const RunConfig& config, const CliOverrides& cli) {
  if (cli.out) return fs::path(*cli.out);
  return config.output_root / ("generated_" + config.generate_split);
}

SampleLoader make_loader(const RunConfig& config) {
  ConditioningBackend backend = make_conditioning_backend(
      config.conditioning_backend, config.edge_sigma, config.depth_sigma);
  LoaderConfig lc;
  lc.resolution = config.resolution;
  lc.cache_root = cache_root_for(config);
  return SampleLoader(std::move(backend), lc);
}

json dataset_fingerprint(const RunConfig& config) {
  // Content identity for replay: hash of the sorted (path, size) list.
  std::string listing;
  if (fs::is_directory(config.dataset_root)) {
    std::vector<std::string> lines;
    for (const auto& e : fs::recursive_directory_iterator(config.dataset_root))
      if (e.is_regular_file())
        lines.push_back(e.path().string() + ":" +
                        std::to_string(e.file_size()));
    std::sort(lines.begin(), lines.end());
    for (const auto& l : lines) listing += l + "\n";
  }
  return json{{"dataset_root", config.dataset_root.string()},
              {"listing_sha256", sha256_hex(listing.data(), listing.size())}};
}

DatasetIndex pick_split(const RunConfig& config) {
  DatasetIndex index = scan(config.dataset_root, config.dataset_kind);
  auto [base, held] =
      split_base_set(index, config.base_fraction, derive_seed(config.seed, "split"));
  return config.generate_split == "base" ? base : held;
}

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

// ---- commands ----

int cmd_prepare_conditions(const CliOverrides& cli) {
  RunConfig config = load_config(cli);
  Timer timer;
  DatasetIndex index = scan(config.dataset_root, config.dataset_kind);
  SampleLoader loader = make_loader(config);
  const std::vector<Sample> samples = loader.load_all(index);
  std::cout << "prepared conditions for " << samples.size() << " samples ("
            << index.categories.size() << " categories) -> "
            << cache_root_for(config) << "\n";

  RunManifest manifest(config.output_root);
  manifest.add_section("prepare-conditions", config.to_json(),
                       dataset_fingerprint(config),
                       {{"cache_root", cache_root_for(config).string()},
                        {"samples", samples.size()}},
                       timer.seconds());
  return 0;
}

std::vector<TrainItem> collect_train_items(const RunConfig& config,
                                           const SampleLoader& loader) {
  DatasetIndex index = scan(config.dataset_root, config.dataset_kind);
  std::vector<TrainItem> items;
  for (const auto& cat : index.categories)
    for (const auto& entry : cat.train) {
      Sample s = loader.load(entry, cat.name);
      TrainItem item;
      item.id = s.id;
      item.data.conditions = std::move(s.conditions);
      item.data.real_depth = std::move(s.real_depth);
      items.push_back(std::move(item));
    }
  if (items.empty()) throw InputError("no training samples in dataset");
  return items;
}

TrainerOptions trainer_options(const RunConfig& config) {
  TrainerOptions opt;
  opt.schedule = config.schedule;
  opt.weights = config.weights;
  opt.augment = config.augment;
  opt.generator = config.generator;
  opt.discriminator = config.discriminator;
  opt.seed = config.seed;
  const fs::path log_dir = config.output_root / "logs";
  fs::create_directories(log_dir);
  opt.loss_log_path =
      log_dir / ("train_" + std::string(to_string(config.mode)) + ".jsonl");
  fs::remove(*opt.loss_log_path);
  return opt;
}

int cmd_train(const CliOverrides& cli) {
  RunConfig config = load_config(cli);
  Timer timer;
  SampleLoader loader = make_loader(config);
  std::vector<TrainItem> items = collect_train_items(config, loader);

  Checkpoint ckpt = train(std::move(items), config.mode, trainer_options(config));
  const fs::path out = checkpoint_path(config, config.mode);
  fs::create_directories(out.parent_path());
  save_checkpoint(ckpt, out);
  std::cout << "trained " << to_string(config.mode) << "-level model -> "
            << out << "\n";

  RunManifest manifest(config.output_root);
  manifest.add_section("train", config.to_json(), dataset_fingerprint(config),
                       {{"checkpoint", out.string()},
                        {"checkpoint_sha256", sha256_file(out)}},
                       timer.seconds());
  return 0;
}

int cmd_finetune_depth(const CliOverrides& cli) {
  RunConfig config = load_config(cli);
  Timer timer;
  const fs::path rgb_path = checkpoint_path(config, GenerationMode::RgbLevel);
  if (!fs::exists(rgb_path))
    throw PrereqError("missing RGB checkpoint " + rgb_path.string(), "train");
  Checkpoint rgb = load_checkpoint(rgb_path);

  SampleLoader loader = make_loader(config);
  RunConfig depth_config = config;
  depth_config.mode = GenerationMode::DepthLevel;
  depth_config.generator.mode = GenerationMode::DepthLevel;
  std::vector<TrainItem> items = collect_train_items(depth_config, loader);

  Checkpoint ckpt = finetune_depth_level(rgb, std::move(items),
                                         trainer_options(depth_config));
  const fs::path out = checkpoint_path(config, GenerationMode::DepthLevel);
  fs::create_directories(out.parent_path());
  save_checkpoint(ckpt, out);
  std::cout << "fine-tuned depth-level model -> " << out << "\n";

  RunManifest manifest(config.output_root);
  manifest.add_section("finetune-depth", config.to_json(),
                       {{"rgb_checkpoint", rgb_path.string()},
                        {"rgb_checkpoint_sha256", sha256_file(rgb_path)}},
                       {{"checkpoint", out.string()},
                        {"checkpoint_sha256", sha256_file(out)}},
                       timer.seconds());
  return 0;
}

int cmd_generate(const CliOverrides& cli) {
  RunConfig config = load_config(cli);
  Timer timer;
  const fs::path ckpt_path = checkpoint_path(config, config.mode);
  if (!fs::exists(ckpt_path))
    throw PrereqError("missing checkpoint " + ckpt_path.string(),
                      config.mode == GenerationMode::RgbLevel
                          ? "train"
                          : "finetune-depth");
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  auto model = generator_from_checkpoint(ckpt, config.mode);

  SampleLoader loader = make_loader(config);
  DatasetIndex subset = pick_split(config);
  std::vector<Sample> samples;
  for (const auto& cat : subset.categories)
    for (const auto* list : {&cat.train, &cat.test})
      for (const auto& entry : *list) samples.push_back(loader.load(entry, cat.name));
  if (samples.empty()) throw InputError("selected split is empty");

  GenerateConfig gc;
  gc.count_per_decoder = config.count_per_decoder;
  gc.normals_per_decoder = config.normals_per_decoder;
  gc.decoders = config.decoders;
  gc.manipulation = config.manipulation;
  gc.seed = derive_seed(config.seed, "generate/" + config.generate_split);

  const fs::path out_dir = generated_dir(config, cli);
  GenerationManifest gm = generate_dataset(*model, samples, gc, out_dir);
  std::cout << "generated " << gm.rows.size() << " anomaly images -> "
            << out_dir << "\n";

  RunManifest manifest(config.output_root);
  manifest.add_section("generate", config.to_json(),
                       {{"checkpoint", ckpt_path.string()},
                        {"checkpoint_sha256", sha256_file(ckpt_path)},
                        {"split", config.generate_split}},
                       {{"out_dir", out_dir.string()},
                        {"rows", gm.rows.size()}},
                       timer.seconds());
  return 0;
}

// Fixed random conv classifier for the Inception-Score adapter: class
// probabilities from seeded features, no downloads.
class FixedRandomClassifier {
 public:
  FixedRandomClassifier(int classes, std::uint64_t seed)
      : classes_(classes), backbone_(3, seed), seed_(seed) {}

  Eigen::VectorXd probabilities(const ImagePlane& image) const {
    // Pool coarse patch means as features, project, softmax.
    const ImagePlane small = resize_bilinear(image, 8, 8);
    Eigen::VectorXd feat(8 * 8 * 3);
    int at = 0;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) feat(at++) = small.chan(c)(y, x);
    if (proj_.rows() == 0) {
      Rng rng = make_rng(seed_, "is-classifier");
      std::normal_distribution<Scalar> dist(0.0, 1.0);
      proj_.resize(classes_, feat.size());
      for (int i = 0; i < proj_.rows(); ++i)
        for (int j = 0; j < proj_.cols(); ++j) proj_(i, j) = dist(rng);
    }
    Eigen::VectorXd z = proj_ * feat * 4.0;
    const Scalar zmax = z.maxCoeff();
    Eigen::VectorXd p = (z.array() - zmax).exp();
    return p / p.sum();
  }

 private:
  int classes_;
  FeatureDistanceBackbone backbone_;
  std::uint64_t seed_;
  mutable Eigen::MatrixXd proj_;
};

int cmd_evaluate_generation(const CliOverrides& cli) {
  RunConfig config = load_config(cli);
  Timer timer;
  const fs::path gen_dir = generated_dir(config, cli);
  if (!fs::exists(gen_dir / "manifest.jsonl"))
    throw PrereqError("no generation manifest under " + gen_dir.string(),
                      "generate");
  GenerationManifest gm = load_manifest(gen_dir);

  std::vector<ImagePlane> generated;
  for (const auto& row : gm.rows)
    generated.push_back(load_color_image(gen_dir / row.image_path));

  FixedRandomClassifier classifier(config.is_classes,
                                   derive_seed(config.seed, "is"));
  std::vector<Eigen::VectorXd> rows;
  for (const auto& img : generated)
    rows.push_back(classifier.probabilities(img));
  const auto [is_mean, is_std] = inception_score(rows, config.is_splits);

  // LPIPS anchors: held-out real images from the dataset.
  RunConfig held = config;
  held.generate_split = config.generate_split == "base" ? "held" : "base";
  SampleLoader loader = make_loader(held);
  DatasetIndex anchors_index = pick_split(held);
  std::vector<ImagePlane> references;
  for (const auto& cat : anchors_index.categories)
    for (const auto* list : {&cat.test, &cat.train})
      for (const auto& entry : *list) {
        if (static_cast<int>(references.size()) >= config.lpips_references) break;
        references.push_back(loader.load(entry, cat.name).conditions.color);
      }
  if (references.empty()) throw InputError("no reference images for LPIPS");

  FeatureDistanceBackbone backbone(3, derive_seed(config.seed, "lpips"));
  const Scalar lpips = cluster_lpips(generated, references, backbone);

  MetricReport report;
  report.is_mean = is_mean;
  report.is_std = is_std;
  report.cluster_lpips = lpips;
  report.counts = json{{"generated", generated.size()},
                       {"references", references.size()}};
  report.config_echo = config.to_json().at("metrics");

  const fs::path report_dir = config.output_root / "reports";
  fs::create_directories(report_dir);
  const fs::path report_path = report_dir / "generation_metrics.json";
  std::ofstream out(report_path);
  out << report.to_json().dump(2) << "\n";
  std::cout << "IS " << is_mean << " +/- " << is_std << ", cluster-LPIPS "
            << lpips << " -> " << report_path << "\n";

  RunManifest manifest(config.output_root);
  manifest.add_section("evaluate-generation", config.to_json(),
                       {{"generated_dir", gen_dir.string()},
                        {"rows", gm.rows.size()}},
                       {{"report", report_path.string()}}, timer.seconds());
  return 0;
}

int cmd_evaluate_downstream(const CliOverrides& cli) {
  RunConfig config = load_config(cli);
  Timer timer;
  const fs::path train_dir = config.output_root / "generated_base";
  const fs::path eval_dir = config.output_root / "generated_held";
  if (!fs::exists(train_dir / "manifest.jsonl"))
    throw PrereqError("no generated training set under " + train_dir.string(),
                      "generate --split base");
  if (!fs::exists(eval_dir / "manifest.jsonl"))
    throw PrereqError("no generated eval set under " + eval_dir.string(),
                      "generate --split held");

  auto load_set = [](const fs::path& dir, const std::string& tag) {
    GenerationManifest gm = load_manifest(dir);
    std::vector<SegSample> set;
    for (std::size_t i = 0; i < gm.rows.size(); ++i) {
      SegSample s;
      s.id = tag + "/" + gm.rows[i].image_path;
      s.image = load_color_image(dir / gm.rows[i].image_path);
      s.mask = load_gray_image(dir / gm.rows[i].mask_path, PlaneRole::Mask);
      s.mask.chan(0) = (s.mask.chan(0) > 0.5).cast<Scalar>();
      s.mask.range_tag = RangeTag::Binary;
      set.push_back(std::move(s));
    }
    return std::pair{gm, set};
  };
  auto [train_manifest, train_set] = load_set(train_dir, "train");
  auto [eval_manifest, eval_set] = load_set(eval_dir, "eval");

  // normal_ratio caps generated-normal rows relative to anomaly rows.
  {
    long anomalies = 0;
    for (const auto& s : train_set)
      if ((s.mask.chan(0) > 0.0).any()) ++anomalies;
    const long normal_cap = static_cast<long>(
        std::lround(config.normal_ratio * static_cast<double>(anomalies)));
    std::vector<SegSample> capped;
    long normals_used = 0;
    for (auto& s : train_set) {
      const bool is_normal = !(s.mask.chan(0) > 0.0).any();
      if (is_normal && ++normals_used > normal_cap) continue;
      capped.push_back(std::move(s));
    }
    train_set = std::move(capped);
  }

  SegmenterResult seg = train_segmenter(train_set, eval_set, config.downstream);

  // Persist per-sample score dumps so reports stay recomputable.
  const fs::path dump_dir = config.output_root / "reports" / "score_maps";
  fs::create_directories(dump_dir);
  for (std::size_t i = 0; i < seg.score_maps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "score_%04zu.png", i);
    save_png8(seg.score_maps[i], dump_dir / name);
  }

  MetricReport report;
  report.pixel_level = seg.pixel;
  report.image_level = seg.image;
  report.counts = json{{"train", train_set.size()}, {"eval", eval_set.size()}};
  report.config_echo = config.to_json().at("downstream");

  // Defect-type classifier when the manifest carries >= 2 defect labels.
  std::set<std::string> defects;
  for (const auto& row : train_manifest.rows) defects.insert(row.defect);
  if (defects.size() >= 2) {
    std::map<std::string, int> label_of;
    for (const auto& d : defects)
      label_of.emplace(d, static_cast<int>(label_of.size()));
    auto to_labeled = [&](const GenerationManifest& gm, const fs::path& dir,
                          const std::string& tag) {
      std::vector<LabeledImage> out;
      for (const auto& row : gm.rows) {
        if (!label_of.count(row.defect)) continue;
        LabeledImage li;
        li.id = tag + "/" + row.image_path;
        li.image = load_color_image(dir / row.image_path);
        li.label = label_of.at(row.defect);
        out.push_back(std::move(li));
      }
      return out;
    };
    ClassifierResult cls = train_classifier(
        to_labeled(train_manifest, train_dir, "train"),
        to_labeled(eval_manifest, eval_dir, "eval"),
        static_cast<int>(label_of.size()), config.downstream);
    report.counts["classifier_accuracy"] = cls.accuracy;
  }

  const fs::path report_dir = config.output_root / "reports";
  const fs::path report_path = report_dir / "downstream_metrics.json";
  std::ofstream out(report_path);
  out << report.to_json().dump(2) << "\n";
  std::cout << "pixel AUROC " << seg.pixel.auroc << ", AP " << seg.pixel.ap
            << ", F1max " << seg.pixel.f1max << " -> " << report_path << "\n";

  RunManifest manifest(config.output_root);
  manifest.add_section("evaluate-downstream", config.to_json(),
                       {{"train_dir", train_dir.string()},
                        {"eval_dir", eval_dir.string()}},
                       {{"report", report_path.string()}}, timer.seconds());
  return 0;
}

int cmd_report(const CliOverrides& cli) {
  RunConfig config = load_config(cli);
  RunManifest manifest(config.output_root);
  if (manifest.sections().empty())
    throw PrereqError("run manifest is empty", "prepare-conditions / train");

  std::ostringstream summary;
  summary << "run summary for " << config.output_root.string() << "\n";
  for (const auto& section : manifest.sections())
    summary << "  - " << section.at("command").get<std::string>() << " ("
            << section.at("timings").at("wall_seconds").get<double>()
            << " s)\n";
  for (const char* name : {"generation_metrics.json", "downstream_metrics.json"}) {
    const fs::path p = config.output_root / "reports" / name;
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    json j;
    in >> j;
    summary << name << ":\n" << j.dump(2) << "\n";
  }
  std::cout << summary.str();
  const fs::path out_path = config.output_root / "reports" / "summary.txt";
  fs::create_directories(out_path.parent_path());
  std::ofstream out(out_path);
  out << summary.str();
  return 0;
}

int cmd_make_toy(const std::string& out, int count, int resolution,
                 std::uint64_t seed, bool with_depth) {
  ToyDatasetSpec spec;
  spec.train_good = count;
  spec.resolution = resolution;
  spec.seed = seed;
  spec.with_depth = with_depth;
  write_toy_dataset(out, spec);
  std::cout << "wrote toy dataset (widget category) -> " << out << "\n";
  return 0;
}

int dispatch(const std::string& command, const CliOverrides& cli) {
  if (command == "prepare-conditions") return cmd_prepare_conditions(cli);
  if (command == "train") return cmd_train(cli);
  if (command == "finetune-depth") return cmd_finetune_depth(cli);
  if (command == "generate") return cmd_generate(cli);
  if (command == "evaluate-generation") return cmd_evaluate_generation(cli);
  if (command == "evaluate-downstream") return cmd_evaluate_downstream(cli);
  if (command == "report") return cmd_report(cli);
  throw ConfigError("unknown command " + command);
}

}  // namespace
}  // namespace anogen

int main(int argc, char** argv) {
  CLI::App app{"anomaly generation pipeline"};
  app.require_subcommand(1);

  anogen::CliOverrides cli;
  std::uint64_t seed_value = 0;
  std::string mode_value, decoders_value, manipulations_value, out_value,
      split_value;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cli.config_path, "run config file (JSON)")
        ->required();
    sub->add_option("--seed", seed_value, "override root seed")
        ->each([&](const std::string&) { cli.seed = seed_value; });
    sub->add_option("--mode", mode_value, "rgb | depth")
        ->each([&](const std::string& v) { cli.mode = v; });
    sub->add_option("--decoders", decoders_value, "ahd | ahe | both")
        ->each([&](const std::string& v) { cli.decoders = v; });
    sub->add_option("--manipulations", manipulations_value,
                    "comma list: merge,remove,replace,tps")
        ->each([&](const std::string& v) { cli.manipulations = v; });
    sub->add_option("--out", out_value, "override output directory")
        ->each([&](const std::string& v) { cli.out = v; });
    sub->add_option("--split", split_value, "base | held")
        ->each([&](const std::string& v) { cli.split = v; });
  };

  for (const char* name :
       {"prepare-conditions", "train", "finetune-depth", "generate",
        "evaluate-generation", "evaluate-downstream", "report"})
    add_common(app.add_subcommand(name));

  auto* toy = app.add_subcommand("make-toy", "write the bundled toy fixture");
  std::string toy_out = "toy_dataset";
  int toy_count = 16, toy_res = 64;
  std::uint64_t toy_seed = 5;
  bool toy_depth = false;
  toy->add_option("--out", toy_out);
  toy->add_option("--count", toy_count);
  toy->add_option("--resolution", toy_res);
  toy->add_option("--seed", toy_seed);
  toy->add_flag("--with-depth", toy_depth);

  CLI11_PARSE(app, argc, argv);

  try {
    if (toy->parsed())
      return anogen::cmd_make_toy(toy_out, toy_count, toy_res, toy_seed,
                                  toy_depth);
    return anogen::dispatch(app.get_subcommands().front()->get_name(), cli);
  } catch (const anogen::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const anogen::PrereqError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const anogen::TrainAbort& e) {
    std::cerr << "error: " << e.what() << "\n  batch:";
    for (const auto& id : e.batch_ids) std::cerr << " " << id;
    std::cerr << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
