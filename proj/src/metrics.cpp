#include "anogen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace anogen {

using nlohmann::json;

Scalar auroc(const ScoreSet& s) {
  s.validate_lengths();
  long pos = 0, neg = 0;
  for (int l : s.labels) (l ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw MetricUndefinedError("auroc needs both classes present");

  // Rank-sum with midranks for ties.
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.scores[a] < s.scores[b];
  });
  Scalar pos_rank_sum = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           s.scores[order[j + 1]] == s.scores[order[i]])
      ++j;
    const Scalar midrank = (static_cast<Scalar>(i) + static_cast<Scalar>(j)) / 2 + 1;
    for (std::size_t k = i; k <= j; ++k)
      if (s.labels[order[k]]) pos_rank_sum += midrank;
    i = j + 1;
  }
  const Scalar u = pos_rank_sum - static_cast<Scalar>(pos) * (pos + 1) / 2;
  return u / (static_cast<Scalar>(pos) * static_cast<Scalar>(neg));
}

namespace {

// Descending score, ties broken by ascending input index.
std::vector<std::size_t> rank_order(const ScoreSet& s) {
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (s.scores[a] != s.scores[b]) return s.scores[a] > s.scores[b];
    return a < b;
  });
  return order;
}

}  // namespace

Scalar average_precision(const ScoreSet& s) {
  s.validate_lengths();
  const long pos = std::count(s.labels.begin(), s.labels.end(), 1);
  if (pos == 0)
    throw MetricUndefinedError("average_precision needs at least one positive");
  const auto order = rank_order(s);
  Scalar sum = 0;
  long seen_pos = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (s.labels[order[k]]) {
      ++seen_pos;
      sum += static_cast<Scalar>(seen_pos) / static_cast<Scalar>(k + 1);
    }
  }
  return sum / static_cast<Scalar>(pos);
}

Scalar f1_max(const ScoreSet& s) {
  s.validate_lengths();
  const long pos = std::count(s.labels.begin(), s.labels.end(), 1);
  if (pos == 0) throw MetricUndefinedError("f1_max needs at least one positive");

  std::vector<Scalar> thresholds = s.scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  Scalar best = 0;
  for (Scalar t : thresholds) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      const bool pred = s.scores[i] >= t;
      if (pred && s.labels[i]) ++tp;
      if (pred && !s.labels[i]) ++fp;
      if (!pred && s.labels[i]) ++fn;
    }
    if (tp == 0) continue;
    const Scalar f1 = 2.0 * tp / static_cast<Scalar>(2 * tp + fp + fn);
    best = std::max(best, f1);
  }
  return best;
}

Scalar recall_at_tnr(const std::vector<Scalar>& normal_scores,
                     const std::vector<Scalar>& anomaly_scores, Scalar tnr) {
  if (normal_scores.empty() || anomaly_scores.empty())
    throw InputError("recall_at_tnr needs nonempty score lists");
  if (tnr <= 0 || tnr >= 1) throw InputError("tnr must lie in (0,1)");
  std::vector<Scalar> sorted = normal_scores;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<Scalar>(sorted.size());
  // Small guard keeps ceil() honest when tnr*n rounds just above an
  // integer (e.g. 0.2 * 5).
  auto idx = static_cast<std::size_t>(std::ceil(tnr * n - 1e-9)) - 1;
  idx = std::min(idx, sorted.size() - 1);
  const Scalar threshold = sorted[idx];
  long hits = 0;
  for (Scalar a : anomaly_scores)
    if (a > threshold) ++hits;
  return static_cast<Scalar>(hits) / static_cast<Scalar>(anomaly_scores.size());
}

Scalar harmonic_mean(const std::vector<Scalar>& values) {
  if (values.empty()) throw InputError("harmonic_mean of empty list");
  Scalar denom = 0;
  for (Scalar v : values) {
    if (v <= 0) return 0;  // convention: any zero collapses the mean
    denom += 1.0 / v;
  }
  return static_cast<Scalar>(values.size()) / denom;
}

std::pair<Scalar, Scalar> inception_score(
    const std::vector<Eigen::VectorXd>& rows, int splits) {
  if (rows.empty()) throw InputError("inception_score needs rows");
  if (splits < 1) throw InputError("splits must be >= 1");
  const auto k = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != k) throw InputError("probability rows ragged");
    if ((row.array() < 0).any() || std::abs(row.sum() - 1.0) > 1e-6)
      throw InputError("rows must be probability vectors (sum to 1)");
  }

  std::vector<Scalar> split_scores;
  const std::size_t n = rows.size();
  for (int split = 0; split < splits; ++split) {
    const std::size_t begin = n * static_cast<std::size_t>(split) /
                              static_cast<std::size_t>(splits);
    const std::size_t end = n * static_cast<std::size_t>(split + 1) /
                            static_cast<std::size_t>(splits);
    if (begin >= end) continue;
    Eigen::VectorXd marginal = Eigen::VectorXd::Zero(k);
    for (std::size_t i = begin; i < end; ++i) marginal += rows[i];
    marginal /= static_cast<Scalar>(end - begin);

    Scalar mean_kl = 0;
    for (std::size_t i = begin; i < end; ++i) {
      Scalar kl = 0;
      for (Eigen::Index c = 0; c < k; ++c) {
        const Scalar p = rows[i](c);
        if (p > 0) kl += p * std::log(p / marginal(c));
      }
      mean_kl += kl;
    }
    mean_kl /= static_cast<Scalar>(end - begin);
    split_scores.push_back(std::exp(mean_kl));
  }

  const Scalar mean =
      std::accumulate(split_scores.begin(), split_scores.end(), Scalar(0)) /
      static_cast<Scalar>(split_scores.size());
  Scalar var = 0;
  for (Scalar v : split_scores) var += (v - mean) * (v - mean);
  var /= static_cast<Scalar>(split_scores.size());
  return {mean, std::sqrt(var)};
}

// ---- perceptual distance ----

namespace {

// Minimal fixed conv feature stack over plane channels (no autodiff
// needed on the evaluation path).
struct FixedConv {
  int in_ch, out_ch, stride;
  std::vector<PlaneChannel<Scalar>> weights;  // out*in kernels, 3x3 each
};

std::vector<PlaneChannel<Scalar>> conv_forward(
    const std::vector<PlaneChannel<Scalar>>& input, const FixedConv& conv) {
  const int h = static_cast<int>(input[0].rows());
  const int w = static_cast<int>(input[0].cols());
  const int oh = (h + 2 - 3) / conv.stride + 1;
  const int ow = (w + 2 - 3) / conv.stride + 1;
  std::vector<PlaneChannel<Scalar>> out(
      static_cast<std::size_t>(conv.out_ch));
  for (int o = 0; o < conv.out_ch; ++o) {
    out[static_cast<std::size_t>(o)].setZero(oh, ow);
    for (int c = 0; c < conv.in_ch; ++c) {
      const auto& kern =
          conv.weights[static_cast<std::size_t>(o * conv.in_ch + c)];
      const auto& src = input[static_cast<std::size_t>(c)];
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          Scalar acc = 0;
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = oy * conv.stride - 1 + ky;
              const int ix = ox * conv.stride - 1 + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += kern(ky, kx) * src(iy, ix);
            }
          out[static_cast<std::size_t>(o)](oy, ox) += acc;
        }
    }
    out[static_cast<std::size_t>(o)] =
        out[static_cast<std::size_t>(o)].tanh();
  }
  return out;
}

// Unit-normalize the channel vector at each pixel, then mean squared
// difference over space summed over channels.
Scalar normalized_feature_distance(
    const std::vector<PlaneChannel<Scalar>>& fa,
    const std::vector<PlaneChannel<Scalar>>& fb) {
  const int h = static_cast<int>(fa[0].rows());
  const int w = static_cast<int>(fa[0].cols());
  const std::size_t c = fa.size();
  Scalar total = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Scalar na = 0, nb = 0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        na += fa[ch](y, x) * fa[ch](y, x);
        nb += fb[ch](y, x) * fb[ch](y, x);
      }
      na = std::sqrt(na) + 1e-10;
      nb = std::sqrt(nb) + 1e-10;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const Scalar d = fa[ch](y, x) / na - fb[ch](y, x) / nb;
        total += d * d;
      }
    }
  return total / (static_cast<Scalar>(h) * static_cast<Scalar>(w));
}

}  // namespace

struct FeatureDistanceBackbone::Impl {
  int in_channels;
  std::vector<FixedConv> convs;
};

FeatureDistanceBackbone::FeatureDistanceBackbone(int in_channels,
                                                 std::uint64_t seed)
    : impl_(std::make_shared<Impl>()) {
  impl_->in_channels = in_channels;
  Rng rng = make_rng(seed, "distance-backbone",
                     static_cast<std::uint64_t>(in_channels));
  const int widths[3] = {8, 16, 16};
  const int strides[3] = {1, 2, 2};
  int prev = in_channels;
  for (int layer = 0; layer < 3; ++layer) {
    FixedConv conv;
    conv.in_ch = prev;
    conv.out_ch = widths[layer];
    conv.stride = strides[layer];
    std::normal_distribution<Scalar> dist(0.0, std::sqrt(2.0 / (prev * 9)));
    for (int i = 0; i < conv.out_ch * conv.in_ch; ++i) {
      PlaneChannel<Scalar> kern(3, 3);
      for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) kern(y, x) = dist(rng);
      conv.weights.push_back(std::move(kern));
    }
    impl_->convs.push_back(std::move(conv));
    prev = widths[layer];
  }
}

Scalar FeatureDistanceBackbone::distance(const ImagePlane& a,
                                         const ImagePlane& b) const {
  if (!a.same_shape(b) || a.channel_count() != b.channel_count())
    throw DimensionError("perceptual distance shape mismatch");
  if (a.channel_count() != impl_->in_channels)
    throw DimensionError("distance backbone channel mismatch");
  std::vector<PlaneChannel<Scalar>> fa = a.channels, fb = b.channels;
  Scalar total = 0;
  for (const auto& conv : impl_->convs) {
    fa = conv_forward(fa, conv);
    fb = conv_forward(fb, conv);
    total += normalized_feature_distance(fa, fb);
  }
  return total;
}

Scalar AbsDiffBackbone::distance(const ImagePlane& a,
                                 const ImagePlane& b) const {
  if (!a.same_shape(b) || a.channel_count() != b.channel_count())
    throw DimensionError("perceptual distance shape mismatch");
  Scalar total = 0;
  for (int c = 0; c < a.channel_count(); ++c)
    total += (a.chan(c) - b.chan(c)).abs().mean();
  return total / a.channel_count();
}

Scalar perceptual_distance(const ImagePlane& a, const ImagePlane& b,
                           const DistanceBackbone& backbone) {
  return backbone.distance(a, b);
}

Scalar cluster_lpips(const std::vector<ImagePlane>& generated,
                     const std::vector<ImagePlane>& references,
                     const DistanceBackbone& backbone) {
  if (generated.empty() || references.empty())
    throw InputError("cluster_lpips needs nonempty inputs");

  std::vector<std::vector<std::size_t>> groups(references.size());
  for (std::size_t g = 0; g < generated.size(); ++g) {
    std::size_t best = 0;
    Scalar best_d = backbone.distance(generated[g], references[0]);
    for (std::size_t r = 1; r < references.size(); ++r) {
      const Scalar d = backbone.distance(generated[g], references[r]);
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    groups[best].push_back(g);
  }

  Scalar sum = 0;
  long included = 0;
  for (const auto& members : groups) {
    if (members.size() < 2) continue;
    Scalar pair_sum = 0;
    long pairs = 0;
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        pair_sum += backbone.distance(generated[members[i]],
                                      generated[members[j]]);
        ++pairs;
      }
    sum += pair_sum / static_cast<Scalar>(pairs);
    ++included;
  }
  return included > 0 ? sum / static_cast<Scalar>(included) : 0.0;
}

PixelMetrics pixel_metrics(const std::vector<ImagePlane>& score_maps,
                           const std::vector<ImagePlane>& gt_masks) {
  if (score_maps.size() != gt_masks.size() || score_maps.empty())
    throw InputError("pixel_metrics needs paired maps and masks");
  ScoreSet flat;
  for (std::size_t i = 0; i < score_maps.size(); ++i) {
    const auto& sm = score_maps[i];
    const auto& gm = gt_masks[i];
    if (!sm.same_shape(gm))
      throw DimensionError("score map / mask shape mismatch");
    for (int y = 0; y < sm.height(); ++y)
      for (int x = 0; x < sm.width(); ++x) {
        flat.scores.push_back(sm.chan(0)(y, x));
        flat.labels.push_back(gm.chan(0)(y, x) > 0 ? 1 : 0);
      }
  }
  PixelMetrics out;
  out.auroc = auroc(flat);
  out.ap = average_precision(flat);
  out.f1max = f1_max(flat);
  return out;
}

json MetricReport::to_json() const {
  json j{{"schema", kSchemaVersion}};
  if (is_mean) j["is_mean"] = *is_mean;
  if (is_std) j["is_std"] = *is_std;
  if (cluster_lpips) j["cluster_lpips"] = *cluster_lpips;
  auto put_pixel = [&](const char* key, const PixelMetrics& m) {
    j[key] = json{{"auroc", m.auroc}, {"ap", m.ap}, {"f1max", m.f1max}};
  };
  if (image_level) put_pixel("image_level", *image_level);
  if (pixel_level) put_pixel("pixel_level", *pixel_level);
  if (!recalls.empty()) {
    json r = json::object();
    for (const auto& [name, value] : recalls) r[name] = value;
    j["recalls"] = r;
  }
  if (recall_harmonic_mean) j["recall_harmonic_mean"] = *recall_harmonic_mean;
  if (!counts.is_null()) j["counts"] = counts;
  if (!config_echo.is_null()) j["config"] = config_echo;
  return j;
}

MetricReport MetricReport::from_json(const json& j) {
  MetricReport r;
  if (j.contains("is_mean")) r.is_mean = j.at("is_mean").get<Scalar>();
  if (j.contains("is_std")) r.is_std = j.at("is_std").get<Scalar>();
  if (j.contains("cluster_lpips"))
    r.cluster_lpips = j.at("cluster_lpips").get<Scalar>();
  auto get_pixel = [&](const char* key) -> std::optional<PixelMetrics> {
    if (!j.contains(key)) return std::nullopt;
    PixelMetrics m;
    m.auroc = j.at(key).at("auroc").get<Scalar>();
    m.ap = j.at(key).at("ap").get<Scalar>();
    m.f1max = j.at(key).at("f1max").get<Scalar>();
    return m;
  };
  r.image_level = get_pixel("image_level");
  r.pixel_level = get_pixel("pixel_level");
  if (j.contains("recalls"))
    for (const auto& [name, value] : j.at("recalls").items())
      r.recalls.emplace_back(name, value.get<Scalar>());
  if (j.contains("recall_harmonic_mean"))
    r.recall_harmonic_mean = j.at("recall_harmonic_mean").get<Scalar>();
  if (j.contains("counts")) r.counts = j.at("counts");
  if (j.contains("config")) r.config_echo = j.at("config");
  return r;
}

}  // namespace anogen
