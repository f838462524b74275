#include "anogen/downstream.hpp"

#include <algorithm>
#include <set>

namespace anogen {

using nn::Var;

namespace {

void check_disjoint(const std::set<std::string>& train_ids,
                    const std::set<std::string>& eval_ids) {
  for (const auto& id : eval_ids)
    if (train_ids.count(id))
      throw InputError("train and eval sets share sample id: " + id);
}

nn::Tensor image_batch(const std::vector<const ImagePlane*>& planes) {
  const int n = static_cast<int>(planes.size());
  const int c = planes[0]->channel_count();
  const int h = planes[0]->height(), w = planes[0]->width();
  nn::Tensor out(n, c, h, w);
  for (int i = 0; i < n; ++i) {
    const nn::Tensor one = planes_to_tensor({planes[static_cast<std::size_t>(i)]});
    out.sample(i) = one.sample(0);
  }
  return out;
}

struct ConvBundle {
  Var w, b;
};

ConvBundle bundle(nn::ParamSet& params, const std::string& name, int in_ch,
                  int out_ch, int k, Rng& rng) {
  ConvBundle cb;
  const Scalar stddev = std::sqrt(2.0 / (in_ch * k * k));
  cb.w = params.add(name + ".w", nn::normal_init(out_ch, in_ch, k, k, stddev, rng));
  cb.b = params.add(name + ".b", nn::constant_init(1, out_ch, 1, 1, 0.0));
  return cb;
}

Var conv_relu(const nn::ParamSet& params, const std::string& name, const Var& x,
              const nn::ConvSpec& spec) {
  return nn::relu(nn::conv2d(x, params.find(name + ".w"),
                             params.find(name + ".b"), spec));
}

}  // namespace

ClassifierResult train_classifier(const std::vector<LabeledImage>& train,
                                  const std::vector<LabeledImage>& eval,
                                  int num_classes,
                                  const DownstreamConfig& config) {
  if (num_classes < 2)
    throw ConfigError("classifier needs at least two classes");
  if (train.empty() || eval.empty())
    throw InputError("classifier needs train and eval data");
  {
    std::set<std::string> tids, eids;
    for (const auto& s : train) tids.insert(s.id);
    for (const auto& s : eval) eids.insert(s.id);
    check_disjoint(tids, eids);
  }

  Rng rng = make_rng(config.seed, "classifier-init");
  nn::ParamSet params;
  const int b = config.base_channels;
  const int in_ch = train[0].image.channel_count();
  bundle(params, "stem", in_ch, b, 3, rng);
  bundle(params, "res0a", b, b, 3, rng);
  bundle(params, "res0b", b, b, 3, rng);
  bundle(params, "down", b, 2 * b, 3, rng);
  bundle(params, "res1a", 2 * b, 2 * b, 3, rng);
  bundle(params, "res1b", 2 * b, 2 * b, 3, rng);
  bundle(params, "fc", 2 * b, num_classes, 1, rng);

  auto forward = [&](const nn::Tensor& batch) -> Var {
    Var x = nn::make_leaf(batch);
    x = conv_relu(params, "stem", x, {3, 2, 1});
    Var r = conv_relu(params, "res0a", x, {3, 1, 1});
    r = nn::conv2d(r, params.find("res0b.w"), params.find("res0b.b"), {3, 1, 1});
    x = nn::relu(nn::add(x, r));
    x = conv_relu(params, "down", x, {3, 2, 1});
    r = conv_relu(params, "res1a", x, {3, 1, 1});
    r = nn::conv2d(r, params.find("res1b.w"), params.find("res1b.b"), {3, 1, 1});
    x = nn::relu(nn::add(x, r));
    x = nn::spatial_mean(x);
    return nn::conv2d(x, params.find("fc.w"), params.find("fc.b"), {1, 1, 0});
  };

  nn::Adam adam({0.9, 0.999, 1e-8});
  for (long step = 0; step < config.steps; ++step) {
    Rng order_rng = make_rng(config.seed, "classifier-batch",
                             static_cast<std::uint64_t>(step));
    nn::Tensor batch(std::min<int>(config.batch_size,
                                   static_cast<int>(train.size())),
                     in_ch, train[0].image.height(), train[0].image.width());
    std::vector<int> labels;
    std::vector<const ImagePlane*> chosen;
    for (int i = 0; i < batch.n; ++i) {
      const auto& item = train[static_cast<std::size_t>(
          uniform_int(order_rng, 0, static_cast<int>(train.size()) - 1))];
      chosen.push_back(&item.image);
      labels.push_back(item.label);
    }
    batch = image_batch(chosen);
    Var loss = nn::cross_entropy_logits(forward(batch), labels);
    params.zero_grad();
    nn::backward(loss);
    adam.step(params, config.learning_rate);
  }

  ClassifierResult result;
  long correct = 0;
  for (const auto& item : eval) {
    Var logits = forward(image_batch({&item.image}));
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
      if (logits->value.data(c, 0) > logits->value.data(best, 0)) best = c;
    result.predictions.push_back(best);
    if (best == item.label) ++correct;
  }
  result.accuracy = static_cast<Scalar>(correct) / static_cast<Scalar>(eval.size());
  return result;
}

SegmenterResult train_segmenter(const std::vector<SegSample>& train,
                                const std::vector<SegSample>& eval,
                                const DownstreamConfig& config) {
  if (train.empty() || eval.empty())
    throw InputError("segmenter needs train and eval data");
  for (const auto& s : train)
    if (!s.image.same_shape(s.mask)) throw InputError("segmenter mask mismatch");
  {
    std::set<std::string> tids, eids;
    for (const auto& s : train) tids.insert(s.id);
    for (const auto& s : eval) eids.insert(s.id);
    check_disjoint(tids, eids);
  }

  Rng rng = make_rng(config.seed, "segmenter-init");
  nn::ParamSet params;
  const int b = config.base_channels;
  const int in_ch = train[0].image.channel_count();
  bundle(params, "enc0", in_ch, b, 3, rng);
  bundle(params, "enc1", b, 2 * b, 3, rng);
  bundle(params, "enc2", 2 * b, 4 * b, 3, rng);
  bundle(params, "up1", 4 * b, 2 * b, 3, rng);
  bundle(params, "mix1", 4 * b, 2 * b, 3, rng);
  bundle(params, "up0", 2 * b, b, 3, rng);
  bundle(params, "mix0", 2 * b, b, 3, rng);
  bundle(params, "head", b, 1, 3, rng);

  auto forward = [&](const nn::Tensor& batch) -> Var {
    Var e0 = conv_relu(params, "enc0", nn::make_leaf(batch), {3, 1, 1});
    Var e1 = conv_relu(params, "enc1", e0, {3, 2, 1});
    Var e2 = conv_relu(params, "enc2", e1, {3, 2, 1});
    Var y = nn::upsample_nearest2(e2);
    y = conv_relu(params, "up1", y, {3, 1, 1});
    y = nn::concat_channels(y, e1);
    y = conv_relu(params, "mix1", y, {3, 1, 1});
    y = nn::upsample_nearest2(y);
    y = conv_relu(params, "up0", y, {3, 1, 1});
    y = nn::concat_channels(y, e0);
    y = conv_relu(params, "mix0", y, {3, 1, 1});
    return nn::conv2d(y, params.find("head.w"), params.find("head.b"), {3, 1, 1});
  };

  const int h = train[0].image.height(), w = train[0].image.width();
  nn::Adam adam({0.9, 0.999, 1e-8});
  for (long step = 0; step < config.steps; ++step) {
    Rng order_rng = make_rng(config.seed, "segmenter-batch",
                             static_cast<std::uint64_t>(step));
    const int nb =
        std::min<int>(config.batch_size, static_cast<int>(train.size()));
    std::vector<const ImagePlane*> images;
    nn::Tensor targets(nb, 1, h, w);
    for (int i = 0; i < nb; ++i) {
      const auto& item = train[static_cast<std::size_t>(
          uniform_int(order_rng, 0, static_cast<int>(train.size()) - 1))];
      images.push_back(&item.image);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          targets.data(i, y * w + x) = item.mask.chan(0)(y, x) > 0 ? 1.0 : 0.0;
    }
    Var loss = nn::bce_logits_mean(forward(image_batch(images)), targets);
    params.zero_grad();
    nn::backward(loss);
    adam.step(params, config.learning_rate);
  }

  SegmenterResult result;
  std::vector<ImagePlane> gt;
  std::vector<ImagePlane> image_score_maps, image_gt;
  for (const auto& item : eval) {
    Var logits = forward(image_batch({&item.image}));
    ImagePlane score(h, w, PlaneRole::FusionMap, RangeTag::Unit);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Scalar z = logits->value.data(0, y * w + x);
        score.chan(0)(y, x) = 0.5 * std::tanh(0.5 * z) + 0.5;
      }
    result.image_scores.push_back(score.chan(0).maxCoeff());
    result.score_maps.push_back(std::move(score));
    gt.push_back(item.mask);
  }
  result.pixel = pixel_metrics(result.score_maps, gt);

  // Image-level: one score per sample (spatial max), label = any
  // anomalous pixel.
  ScoreSet image_set;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    image_set.scores.push_back(result.image_scores[i]);
    image_set.labels.push_back((gt[i].chan(0) > 0.0).any() ? 1 : 0);
  }
  const bool both_classes =
      std::count(image_set.labels.begin(), image_set.labels.end(), 1) > 0 &&
      std::count(image_set.labels.begin(), image_set.labels.end(), 0) > 0;
  if (both_classes) {
    result.image.auroc = auroc(image_set);
    result.image.ap = average_precision(image_set);
    result.image.f1max = f1_max(image_set);
  }
  return result;
}

RandomProjectionEmbedding::RandomProjectionEmbedding(int dimension,
                                                     std::uint64_t seed)
    : dim_(dimension), seed_(seed) {}

Eigen::VectorXd RandomProjectionEmbedding::embed(const ImagePlane& image) const {
  const ImagePlane small = resize_bilinear(image, 16, 16);
  const int in_size = 16 * 16 * small.channel_count();
  if (projection_.rows() == 0 || input_size_ != in_size) {
    Rng rng = make_rng(seed_, "embedding-projection",
                       static_cast<std::uint64_t>(in_size));
    std::normal_distribution<Scalar> dist(0.0, 1.0 / std::sqrt(in_size));
    projection_.resize(dim_, in_size);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < in_size; ++j) projection_(i, j) = dist(rng);
    input_size_ = in_size;
  }
  Eigen::VectorXd flat(in_size);
  int at = 0;
  for (int c = 0; c < small.channel_count(); ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) flat(at++) = small.chan(c)(y, x);
  return (projection_ * flat).array().tanh();
}

namespace {

// Full-batch logistic regression.
Eigen::VectorXd fit_logistic(const std::vector<HybridExample>& train,
                             int iters, Scalar lr) {
  const auto d = train[0].embedding.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d + 1);
    for (const auto& ex : train) {
      Scalar z = w.head(d).dot(ex.embedding) + w(d);
      const Scalar p = 0.5 * std::tanh(0.5 * z) + 0.5;
      const Scalar err = p - (ex.hybrid ? 1.0 : 0.0);
      grad.head(d) += err * ex.embedding;
      grad(d) += err;
    }
    w -= lr / static_cast<Scalar>(train.size()) * grad;
  }
  return w;
}

// Linear SVM via SGD on the hinge loss.
Eigen::VectorXd fit_margin_sgd(const std::vector<HybridExample>& train,
                               int epochs, Scalar lr, Scalar reg,
                               std::uint64_t seed) {
  const auto d = train[0].embedding.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  Rng rng = make_rng(seed, "margin-sgd");
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int ep = 0; ep < epochs; ++ep) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto& ex = train[i];
      const Scalar y = ex.hybrid ? 1.0 : -1.0;
      const Scalar z = w.head(d).dot(ex.embedding) + w(d);
      w.head(d) *= (1.0 - lr * reg);
      if (y * z < 1.0) {
        w.head(d) += lr * y * ex.embedding;
        w(d) += lr * y;
      }
    }
  }
  return w;
}

Scalar head_score(const Eigen::VectorXd& w, const Eigen::VectorXd& e) {
  const auto d = e.size();
  return w.head(d).dot(e) + w(d);
}

}  // namespace

nlohmann::json HybridDetectionReport::to_json() const {
  nlohmann::json per_type = nlohmann::json::object();
  for (std::size_t i = 0; i < types.size(); ++i)
    per_type[types[i]] = {{"linear", recall_linear[i]},
                          {"margin", recall_margin[i]},
                          {"max", recall_max[i]}};
  return {{"recalls", per_type},
          {"hmean_linear", hmean_linear},
          {"hmean_margin", hmean_margin},
          {"hmean_max", hmean_max},
          {"absent_types", absent_types}};
}

HybridDetectionReport evaluate_hybrid_detection(
    const std::vector<HybridExample>& train,
    const std::vector<HybridExample>& test, Scalar tnr, std::uint64_t seed) {
  if (train.empty() || test.empty())
    throw InputError("hybrid detection needs train and test examples");

  const Eigen::VectorXd w_lin = fit_logistic(train, 300, 0.5);
  const Eigen::VectorXd w_margin = fit_margin_sgd(train, 40, 0.01, 1e-4, seed);

  std::vector<Scalar> normal_lin, normal_margin;
  std::map<std::string, std::vector<Scalar>> type_lin, type_margin;
  std::set<std::string> train_types;
  for (const auto& ex : train)
    if (ex.hybrid && !ex.type.empty()) train_types.insert(ex.type);
  for (const auto& ex : test) {
    const Scalar sl = head_score(w_lin, ex.embedding);
    const Scalar sm = head_score(w_margin, ex.embedding);
    if (!ex.hybrid) {
      normal_lin.push_back(sl);
      normal_margin.push_back(sm);
    } else {
      type_lin[ex.type].push_back(sl);
      type_margin[ex.type].push_back(sm);
    }
  }
  if (normal_lin.empty())
    throw InputError("hybrid detection needs normal test examples");

  HybridDetectionReport report;
  std::vector<Scalar> lin_vals, margin_vals, max_vals;
  for (const auto& [type, scores] : type_lin) {
    const Scalar rl = recall_at_tnr(normal_lin, scores, tnr);
    const Scalar rm = recall_at_tnr(normal_margin, type_margin[type], tnr);
    report.types.push_back(type);
    report.recall_linear.push_back(rl);
    report.recall_margin.push_back(rm);
    report.recall_max.push_back(std::max(rl, rm));
    lin_vals.push_back(rl);
    margin_vals.push_back(rm);
    max_vals.push_back(std::max(rl, rm));
  }
  for (const auto& t : train_types)
    if (!type_lin.count(t)) report.absent_types.push_back(t);

  if (!lin_vals.empty()) {
    report.hmean_linear = harmonic_mean(lin_vals);
    report.hmean_margin = harmonic_mean(margin_vals);
    report.hmean_max = harmonic_mean(max_vals);
  }
  return report;
}

}  // namespace anogen
