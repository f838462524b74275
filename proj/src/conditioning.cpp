#include "anogen/conditioning.hpp"

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "anogen/image_io.hpp"

namespace anogen {

ImagePlane GradientEdgeExtractor::extract(const ImagePlane& color) {
  ++invocations_;
  validate_plane(color);
  const ImagePlane smoothed = gaussian_blur(luminance(color), sigma_);
  const auto& lum = smoothed.chan(0);
  const int h = color.height(), w = color.width();
  ImagePlane out(h, w, PlaneRole::Edge, RangeTag::Unit);
  auto& e = out.chan(0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Scalar gx = lum(y, std::min(x + 1, w - 1)) - lum(y, std::max(x - 1, 0));
      const Scalar gy = lum(std::min(y + 1, h - 1), x) - lum(std::max(y - 1, 0), x);
      e(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  const Scalar peak = e.maxCoeff();
  if (peak > 0) e /= peak;
  return out;
}

std::string GradientEdgeExtractor::version() const {
  return "gradient-edge/1 sigma=" + std::to_string(sigma_);
}

ImagePlane LuminanceDepthEstimator::estimate(const ImagePlane& color) {
  ++invocations_;
  validate_plane(color);
  ImagePlane depth = minmax_normalize(gaussian_blur(luminance(color), sigma_));
  depth.role = PlaneRole::Depth;
  return depth;
}

std::string LuminanceDepthEstimator::version() const {
  return "luminance-depth/1 sigma=" + std::to_string(sigma_);
}

namespace {

// Shells out `command in out`; returns the plane from `out` or nullopt.
std::optional<ImagePlane> run_external(const std::string& command,
                                       const ImagePlane& color,
                                       PlaneRole role) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() /
                   ("anogen-ext-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto in = dir / "input.png";
  const auto out = dir / "output.plane";
  save_png8(color, in);
  const std::string cmd = command + " " + in.string() + " " + out.string();
  const int rc = std::system(cmd.c_str());
  std::optional<ImagePlane> result;
  if (rc == 0 && fs::exists(out)) {
    try {
      ImagePlane plane = load_raw_plane(out);
      plane.role = role;
      if (plane.channel_count() == 1 && plane.height() == color.height() &&
          plane.width() == color.width())
        result = std::move(plane);
    } catch (const IoError&) {
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return result;
}

}  // namespace

ExternalEdgeExtractor::ExternalEdgeExtractor(std::string command,
                                             std::string version_tag)
    : command_(std::move(command)), version_(std::move(version_tag)) {}

ImagePlane ExternalEdgeExtractor::extract(const ImagePlane& color) {
  if (auto plane = run_external(command_, color, PlaneRole::Edge))
    return *plane;
  std::cerr << "[anogen] edge backend '" << version_
            << "' unavailable, using built-in fallback\n";
  return fallback_.extract(color);
}

ExternalDepthEstimator::ExternalDepthEstimator(std::string command,
                                               std::string version_tag)
    : command_(std::move(command)), version_(std::move(version_tag)) {}

ImagePlane ExternalDepthEstimator::estimate(const ImagePlane& color) {
  if (auto plane = run_external(command_, color, PlaneRole::Depth))
    return *plane;
  std::cerr << "[anogen] depth backend '" << version_
            << "' unavailable, using built-in fallback\n";
  return fallback_.estimate(color);
}

ConditioningBackend make_conditioning_backend(const std::string& name,
                                              Scalar edge_sigma,
                                              Scalar depth_sigma) {
  ConditioningBackend backend;
  if (name == "fallback" || name.empty()) {
    backend.edge = std::make_shared<GradientEdgeExtractor>(edge_sigma);
    backend.depth = std::make_shared<LuminanceDepthEstimator>(depth_sigma);
    return backend;
  }
  if (name.rfind("external:", 0) == 0) {
    const std::string rest = name.substr(9);
    const auto sep = rest.find(';');
    if (sep == std::string::npos)
      throw ConfigError("external backend needs '<edge_cmd>;<depth_cmd>'");
    backend.edge = std::make_shared<ExternalEdgeExtractor>(
        rest.substr(0, sep), "external-edge:" + rest.substr(0, sep));
    backend.depth = std::make_shared<ExternalDepthEstimator>(
        rest.substr(sep + 1), "external-depth:" + rest.substr(sep + 1));
    return backend;
  }
  throw ConfigError("unknown conditioning backend: " + name);
}

}  // namespace anogen
