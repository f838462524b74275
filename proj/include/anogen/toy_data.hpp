#pragma once

#include <filesystem>

#include "anogen/plane.hpp"
#include "anogen/rng.hpp"

namespace anogen {

// Deterministic procedural fixture: one "widget" category with normal
// train images (gradient background, jittered disk with a ring and a
// notch) and defective test images with ground-truth masks. Layout
// follows the mvtec-style directory contract; with_depth adds a sibling
// 16-bit depth file per color image (rgbd layout).
struct ToyDatasetSpec {
  int train_good = 16;
  int test_good = 4;
  int test_per_defect = 3;
  std::vector<std::string> defects = {"spot", "scratch"};
  int resolution = 64;
  std::uint64_t seed = 5;
  bool with_depth = false;
};

void write_toy_dataset(const std::filesystem::path& root,
                       const ToyDatasetSpec& spec);

// In-memory render of one normal widget (color plane); used by tests
// that do not need files on disk.
ImagePlane render_widget(int resolution, Rng& rng);

// Flat class-per-directory fixture for the hybrid-detection harness:
// two parent looks ("ring", "cross") plus a blended "ring_cross" class.
struct ToyFlatSpec {
  int per_class = 8;
  int resolution = 48;
  std::uint64_t seed = 9;
};

void write_toy_flat_dataset(const std::filesystem::path& root,
                            const ToyFlatSpec& spec);

}  // namespace anogen
