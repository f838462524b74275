#include "anogen/toy_data.hpp"

#include <cmath>

#include "anogen/image_io.hpp"

namespace anogen {

namespace fs = std::filesystem;

namespace {

struct WidgetParams {
  Scalar cx, cy, radius;
  Scalar bg_top, bg_bottom;
  Scalar body_r, body_g, body_b;
};

WidgetParams sample_widget(int res, Rng& rng) {
  WidgetParams p;
  p.cx = res / 2.0 + uniform(rng, -3, 3);
  p.cy = res / 2.0 + uniform(rng, -3, 3);
  p.radius = res * 0.28 + uniform(rng, -2, 2);
  p.bg_top = uniform(rng, 0.12, 0.2);
  p.bg_bottom = uniform(rng, 0.28, 0.36);
  p.body_r = uniform(rng, 0.55, 0.7);
  p.body_g = uniform(rng, 0.35, 0.45);
  p.body_b = uniform(rng, 0.15, 0.25);
  return p;
}

ImagePlane render(const WidgetParams& p, int res) {
  ImagePlane img(res, res, PlaneRole::Color, RangeTag::Unit);
  for (int y = 0; y < res; ++y) {
    const Scalar bg =
        p.bg_top + (p.bg_bottom - p.bg_top) * y / static_cast<Scalar>(res - 1);
    for (int x = 0; x < res; ++x) {
      const Scalar d = std::hypot(x - p.cx, y - p.cy);
      Scalar r = bg, g = bg, b = bg * 1.15;
      if (d < p.radius) {
        r = p.body_r;
        g = p.body_g;
        b = p.body_b;
        // bright ring near the rim, dark notch sector top-right
        if (d > p.radius - 2.5) {
          r = std::min(1.0, r + 0.25);
          g = std::min(1.0, g + 0.25);
          b = std::min(1.0, b + 0.25);
        }
        const Scalar angle = std::atan2(y - p.cy, x - p.cx);
        if (angle > -1.1 && angle < -0.7 && d > p.radius * 0.55) {
          r *= 0.5;
          g *= 0.5;
          b *= 0.5;
        }
      }
      img.chan(0)(y, x) = std::clamp(r, 0.0, 1.0);
      img.chan(1)(y, x) = std::clamp(g, 0.0, 1.0);
      img.chan(2)(y, x) = std::clamp(b, 0.0, 1.0);
    }
  }
  return img;
}

ImagePlane render_depth(const WidgetParams& p, int res) {
  ImagePlane depth(res, res, PlaneRole::Depth, RangeTag::Unit);
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x) {
      const Scalar d = std::hypot(x - p.cx, y - p.cy);
      Scalar v = 0.15 + 0.1 * y / static_cast<Scalar>(res - 1);
      if (d < p.radius) {
        const Scalar t = d / p.radius;
        v = 0.35 + 0.55 * std::sqrt(std::max(0.0, 1.0 - t * t));
      }
      depth.chan(0)(y, x) = std::clamp(v, 0.0, 1.0);
    }
  return depth;
}

// Applies a defect in place and fills the matching mask.
void apply_defect(ImagePlane& img, ImagePlane& mask, const WidgetParams& p,
                  const std::string& defect, Rng& rng) {
  const int res = img.height();
  mask = ImagePlane(res, res, PlaneRole::Mask, RangeTag::Binary, 0.0);
  if (defect == "spot") {
    const Scalar sx = p.cx + uniform(rng, -p.radius * 0.4, p.radius * 0.4);
    const Scalar sy = p.cy + uniform(rng, -p.radius * 0.4, p.radius * 0.4);
    const Scalar sr = uniform(rng, 3.0, 5.5);
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x)
        if (std::hypot(x - sx, y - sy) < sr) {
          for (int c = 0; c < 3; ++c) img.chan(c)(y, x) *= 0.25;
          mask.chan(0)(y, x) = 1.0;
        }
  } else {  // scratch: bright diagonal streak
    const Scalar x0 = p.cx + uniform(rng, -p.radius * 0.5, 0);
    const Scalar y0 = p.cy + uniform(rng, -p.radius * 0.5, 0);
    const Scalar len = uniform(rng, p.radius * 0.6, p.radius * 1.1);
    const Scalar angle = uniform(rng, 0, 3.14159);
    for (Scalar t = 0; t < len; t += 0.5) {
      const int x = static_cast<int>(std::lround(x0 + t * std::cos(angle)));
      const int y = static_cast<int>(std::lround(y0 + t * std::sin(angle)));
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= res || xx < 0 || xx >= res) continue;
          for (int c = 0; c < 3; ++c)
            img.chan(c)(yy, xx) = std::min(1.0, img.chan(c)(yy, xx) + 0.55);
          mask.chan(0)(yy, xx) = 1.0;
        }
    }
  }
}

void write_sample(const fs::path& dir, const std::string& stem,
                  const ImagePlane& img, bool with_depth,
                  const WidgetParams& p) {
  fs::create_directories(dir);
  save_png8(img, dir / (stem + ".png"));
  if (with_depth)
    save_png16_gray(render_depth(p, img.height()), dir / (stem + "_depth.png"));
}

}  // namespace

ImagePlane render_widget(int resolution, Rng& rng) {
  return render(sample_widget(resolution, rng), resolution);
}

void write_toy_dataset(const fs::path& root, const ToyDatasetSpec& spec) {
  const fs::path cat = root / "widget";
  Rng rng = make_rng(spec.seed, "toy-dataset");

  for (int i = 0; i < spec.train_good; ++i) {
    const WidgetParams p = sample_widget(spec.resolution, rng);
    char stem[16];
    std::snprintf(stem, sizeof(stem), "%03d", i);
    write_sample(cat / "train" / "good", stem, render(p, spec.resolution),
                 spec.with_depth, p);
  }
  for (int i = 0; i < spec.test_good; ++i) {
    const WidgetParams p = sample_widget(spec.resolution, rng);
    char stem[16];
    std::snprintf(stem, sizeof(stem), "%03d", i);
    write_sample(cat / "test" / "good", stem, render(p, spec.resolution),
                 spec.with_depth, p);
  }
  for (const auto& defect : spec.defects) {
    for (int i = 0; i < spec.test_per_defect; ++i) {
      const WidgetParams p = sample_widget(spec.resolution, rng);
      ImagePlane img = render(p, spec.resolution);
      ImagePlane mask;
      apply_defect(img, mask, p, defect, rng);
      char stem[16];
      std::snprintf(stem, sizeof(stem), "%03d", i);
      write_sample(cat / "test" / defect, stem, img, spec.with_depth, p);
      const fs::path gt_dir = cat / "ground_truth" / defect;
      fs::create_directories(gt_dir);
      save_png8(mask, gt_dir / (std::string(stem) + "_mask.png"));
    }
  }
}

void write_toy_flat_dataset(const fs::path& root, const ToyFlatSpec& spec) {
  Rng rng = make_rng(spec.seed, "toy-flat");
  const int res = spec.resolution;
  auto draw = [&](const std::string& cls, int index) {
    ImagePlane img(res, res, PlaneRole::Color, RangeTag::Unit);
    const Scalar cx = res / 2.0 + uniform(rng, -2, 2);
    const Scalar cy = res / 2.0 + uniform(rng, -2, 2);
    const Scalar radius = res * 0.3 + uniform(rng, -2, 2);
    const bool ring = cls == "ring" || cls == "ring_cross";
    const bool cross = cls == "cross" || cls == "ring_cross";
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        Scalar v = 0.15;
        const Scalar d = std::hypot(x - cx, y - cy);
        if (ring && std::abs(d - radius) < 3) v = 0.85;
        if (cross && (std::abs(x - cx) < 2.5 || std::abs(y - cy) < 2.5) &&
            d < radius)
          v = std::max(v, 0.7);
        img.chan(0)(y, x) = v;
        img.chan(1)(y, x) = v * (ring ? 1.0 : 0.7);
        img.chan(2)(y, x) = v * (cross ? 1.0 : 0.7);
      }
    const fs::path dir = root / cls;
    fs::create_directories(dir);
    char stem[16];
    std::snprintf(stem, sizeof(stem), "%03d", index);
    save_png8(img, dir / (std::string(stem) + ".png"));
  };
  for (const char* cls : {"ring", "cross", "ring_cross"})
    for (int i = 0; i < spec.per_class; ++i) draw(cls, i);
}

}  // namespace anogen
