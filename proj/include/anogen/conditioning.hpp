#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "anogen/plane.hpp"

namespace anogen {

// Edge extractor contract: single-channel unit-range plane matching the
// input H x W, deterministic for fixed input. Pretrained backends plug
// in behind this interface; the built-in fallback needs no downloads.
class EdgeExtractor {
 public:
  virtual ~EdgeExtractor() = default;
  virtual ImagePlane extract(const ImagePlane& color) = 0;
  virtual std::string version() const = 0;
  virtual int granularity() const { return 1; }
};

class DepthEstimator {
 public:
  virtual ~DepthEstimator() = default;
  virtual ImagePlane estimate(const ImagePlane& color) = 0;
  virtual std::string version() const = 0;
};

// Normalized gradient magnitude of the luminance after Gaussian
// smoothing. Pure function of pixel data.
class GradientEdgeExtractor : public EdgeExtractor {
 public:
  explicit GradientEdgeExtractor(Scalar sigma = 1.0) : sigma_(sigma) {}
  ImagePlane extract(const ImagePlane& color) override;
  std::string version() const override;
  int invocations() const { return invocations_.load(); }

 private:
  Scalar sigma_;
  std::atomic<int> invocations_{0};
};

// Gaussian-smoothed luminance, min-max normalized to [0,1]; a constant
// image maps to 0.5.
class LuminanceDepthEstimator : public DepthEstimator {
 public:
  explicit LuminanceDepthEstimator(Scalar sigma = 1.0) : sigma_(sigma) {}
  ImagePlane estimate(const ImagePlane& color) override;
  std::string version() const override;
  int invocations() const { return invocations_.load(); }

 private:
  Scalar sigma_;
  std::atomic<int> invocations_{0};
};

// External plugin adapter: runs `command <input.png> <output.plane>` and
// reads the emitted single-channel plane. Falls back to the built-in
// extractor when the command fails.
class ExternalEdgeExtractor : public EdgeExtractor {
 public:
  ExternalEdgeExtractor(std::string command, std::string version_tag);
  ImagePlane extract(const ImagePlane& color) override;
  std::string version() const override { return version_; }

 private:
  std::string command_;
  std::string version_;
  GradientEdgeExtractor fallback_;
};

class ExternalDepthEstimator : public DepthEstimator {
 public:
  ExternalDepthEstimator(std::string command, std::string version_tag);
  ImagePlane estimate(const ImagePlane& color) override;
  std::string version() const override { return version_; }

 private:
  std::string command_;
  std::string version_;
  LuminanceDepthEstimator fallback_;
};

struct ConditioningBackend {
  std::shared_ptr<EdgeExtractor> edge;
  std::shared_ptr<DepthEstimator> depth;

  std::string version() const {
    return edge->version() + "+" + depth->version();
  }
};

// Backend by config string: "fallback" (built-ins) or
// "external:<edge_cmd>;<depth_cmd>".
ConditioningBackend make_conditioning_backend(const std::string& name,
                                              Scalar edge_sigma = 1.0,
                                              Scalar depth_sigma = 1.0);

}  // namespace anogen
