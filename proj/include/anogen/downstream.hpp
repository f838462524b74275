#pragma once

#include "anogen/manipulate.hpp"
#include "anogen/metrics.hpp"
#include "anogen/nn/adam.hpp"

namespace anogen {

struct LabeledImage {
  std::string id;
  ImagePlane image;
  int label = 0;
};

struct SegSample {
  std::string id;
  ImagePlane image;
  ImagePlane mask;
};

struct DownstreamConfig {
  int base_channels = 8;
  long steps = 200;
  int batch_size = 8;
  Scalar learning_rate = 1e-3;
  std::uint64_t seed = 11;
};

struct ClassifierResult {
  Scalar accuracy = 0;          // on the eval set
  std::vector<int> predictions;
};

// Small residual classifier over defect-type labels; reports top-1
// accuracy on the (id-disjoint) eval set.
ClassifierResult train_classifier(const std::vector<LabeledImage>& train,
                                  const std::vector<LabeledImage>& eval,
                                  int num_classes,
                                  const DownstreamConfig& config);

struct SegmenterResult {
  PixelMetrics pixel;
  PixelMetrics image;
  std::vector<ImagePlane> score_maps;   // per eval sample
  std::vector<Scalar> image_scores;     // max of each pixel map
};

// Small U-shaped segmenter trained with pixelwise BCE; the image-level
// score is the spatial max of the pixel score map.
SegmenterResult train_segmenter(const std::vector<SegSample>& train,
                                const std::vector<SegSample>& eval,
                                const DownstreamConfig& config);

// ---- butterfly-style hybrid detection on embeddings ----

class EmbeddingBackbone {
 public:
  virtual ~EmbeddingBackbone() = default;
  virtual Eigen::VectorXd embed(const ImagePlane& image) const = 0;
  virtual int dimension() const = 0;
};

// Fixed random projection of a downsampled image; offline stand-in for
// a pretrained feature extractor.
class RandomProjectionEmbedding : public EmbeddingBackbone {
 public:
  RandomProjectionEmbedding(int dimension = 64, std::uint64_t seed = 17);
  Eigen::VectorXd embed(const ImagePlane& image) const override;
  int dimension() const override { return dim_; }

 private:
  int dim_;
  std::uint64_t seed_;
  mutable Eigen::MatrixXd projection_;  // built lazily once input size known
  mutable int input_size_ = 0;
};

struct HybridExample {
  Eigen::VectorXd embedding;
  bool hybrid = false;
  std::string type;  // hybrid type name for per-type recall ("" if normal)
};

struct HybridDetectionReport {
  // type -> recall under each head
  std::vector<std::string> types;
  std::vector<Scalar> recall_linear, recall_margin, recall_max;
  Scalar hmean_linear = 0, hmean_margin = 0, hmean_max = 0;
  std::vector<std::string> absent_types;

  nlohmann::json to_json() const;
};

// Logistic head plus margin (hinge/SGD) head on embeddings; per-type
// recall at the given TNR plus harmonic means. Types missing from the
// test set are reported as absent.
HybridDetectionReport evaluate_hybrid_detection(
    const std::vector<HybridExample>& train,
    const std::vector<HybridExample>& test, Scalar tnr = 0.95,
    std::uint64_t seed = 19);

}  // namespace anogen
