#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "anogen/plane.hpp"
#include "anogen/rng.hpp"

namespace anogen {

// Scores with binary labels (1 = anomalous).
struct ScoreSet {
  std::vector<Scalar> scores;
  std::vector<int> labels;

  void validate_lengths() const {
    if (scores.size() != labels.size())
      throw InputError("score/label lengths differ");
    if (scores.empty()) throw InputError("empty score set");
  }
};

// Probability a random positive outranks a random negative; ties count
// one half (Mann-Whitney form).
Scalar auroc(const ScoreSet& s);

// Positives-ranks formulation: mean over positives of precision at that
// positive's rank, ranking by descending score with ties broken by
// ascending input index.
Scalar average_precision(const ScoreSet& s);

// Max F1 over thresholds at unique score values (predict positive iff
// score >= t).
Scalar f1_max(const ScoreSet& s);

// Threshold rule: sort normals ascending, t = value at index
// ceil(tnr*n)-1, classify anomalous iff score > t.
Scalar recall_at_tnr(const std::vector<Scalar>& normal_scores,
                     const std::vector<Scalar>& anomaly_scores, Scalar tnr);

// n / sum(1/v); any non-positive value collapses the mean to 0.
Scalar harmonic_mean(const std::vector<Scalar>& values);

// Per split: exp(mean KL(row || split marginal)); result is mean/std
// (population) over splits. Rows must be probability vectors.
std::pair<Scalar, Scalar> inception_score(
    const std::vector<Eigen::VectorXd>& class_probability_rows, int splits);

// Perceptual distance backbone for evaluation (LPIPS-shaped): pluggable
// so tests can run without pretrained weights.
class DistanceBackbone {
 public:
  virtual ~DistanceBackbone() = default;
  virtual Scalar distance(const ImagePlane& a, const ImagePlane& b) const = 0;
};

// Fixed seeded conv features, per-layer channel-normalized, squared
// difference averaged over space, summed over layers.
class FeatureDistanceBackbone : public DistanceBackbone {
 public:
  explicit FeatureDistanceBackbone(int in_channels, std::uint64_t seed = 7);
  Scalar distance(const ImagePlane& a, const ImagePlane& b) const override;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// |mean(a) - mean(b)| style plug-in for tiny fixtures: plain mean
// absolute pixel difference.
class AbsDiffBackbone : public DistanceBackbone {
 public:
  Scalar distance(const ImagePlane& a, const ImagePlane& b) const override;
};

Scalar perceptual_distance(const ImagePlane& a, const ImagePlane& b,
                           const DistanceBackbone& backbone);

// Assign each generated image to the reference minimizing the distance;
// per group, mean pairwise distance over all unordered pairs; groups
// with fewer than two members are excluded from the final average.
Scalar cluster_lpips(const std::vector<ImagePlane>& generated,
                     const std::vector<ImagePlane>& references,
                     const DistanceBackbone& backbone);

struct PixelMetrics {
  Scalar auroc = 0, ap = 0, f1max = 0;
};

// Flattens all pixels of all maps into one ScoreSet and applies the
// three rank metrics.
PixelMetrics pixel_metrics(const std::vector<ImagePlane>& score_maps,
                           const std::vector<ImagePlane>& gt_masks);

struct MetricReport {
  static constexpr const char* kSchemaVersion = "metric-report/1";

  std::optional<Scalar> is_mean, is_std;
  std::optional<Scalar> cluster_lpips;
  std::optional<PixelMetrics> image_level;
  std::optional<PixelMetrics> pixel_level;
  std::vector<std::pair<std::string, Scalar>> recalls;
  std::optional<Scalar> recall_harmonic_mean;
  nlohmann::json counts;
  nlohmann::json config_echo;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

}  // namespace anogen
