#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "anogen/nn/tensor.hpp"
#include "anogen/rng.hpp"

namespace anogen::nn {

// Reverse-mode tape over Tensors. Graphs are rebuilt each forward pass;
// parameters are long-lived leaf variables owned by the models.
struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  bool grad_ready = false;
  std::vector<Var> parents;
  // Distributes this node's grad into parents' grads.
  std::function<void(Node&)> backprop;

  void ensure_grad() {
    if (!grad_ready) {
      grad = Tensor::zeros_like(value);
      grad_ready = true;
    }
  }
};

Var make_leaf(Tensor value, bool requires_grad = false);

// Cuts the tape: same value, no parents, no grad requirement.
Var detach(const Var& x);

// Accumulates d(loss)/d(leaf) into every reachable grad buffer; loss
// must be a scalar node.
void backward(const Var& loss);

// ---- ops ----

struct ConvSpec {
  int kernel = 3;
  int stride = 1;
  int pad = 1;
};

// weight: (out_ch, in_ch, k, k) tensor; bias: (1, out_ch, 1, 1).
Var conv2d(const Var& x, const Var& weight, const Var& bias, const ConvSpec& spec);

// Per-(sample, channel) normalization over spatial dims with affine
// parameters gamma/beta of shape (1, c, 1, 1).
Var instance_norm(const Var& x, const Var& gamma, const Var& beta,
                  Scalar eps = 1e-5);

Var relu(const Var& x);
Var leaky_relu(const Var& x, Scalar slope = 0.2);
Var tanh(const Var& x);
Var sigmoid(const Var& x);

Var upsample_nearest2(const Var& x);
Var avg_pool2(const Var& x);

Var concat_channels(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, Scalar s);

// Replicates a single-channel tensor across `channels`.
Var broadcast_channel(const Var& x, int channels);

// content + map * (source - content), map broadcast over channels.
Var fuse_blend(const Var& content, const Var& source, const Var& map);

// Spatial average: (n, c, h, w) -> (n, c, 1, 1).
Var spatial_mean(const Var& x);

// Scalar reductions (1x1x1x1 result).
Var mean_abs_diff(const Var& a, const Var& b);
Var mean_softplus(const Var& x, Scalar sign);  // mean(log(1+exp(sign*x)))
Var add_scalars(const std::vector<Var>& terms,
                const std::vector<Scalar>& weights);

// Softmax cross entropy over channel logits (n, k, 1, 1) against integer
// class labels; mean over the batch.
Var cross_entropy_logits(const Var& logits, const std::vector<int>& labels);

// Mean binary cross entropy with logits against fixed targets in [0,1].
Var bce_logits_mean(const Var& logits, const Tensor& targets);

// ---- parameters ----

struct ParamEntry {
  std::string name;
  Var var;
};

class ParamSet {
 public:
  Var add(const std::string& name, Tensor init);
  const std::vector<ParamEntry>& entries() const { return entries_; }
  Var find(const std::string& name) const;
  void zero_grad();
  std::size_t total_size() const;

 private:
  std::vector<ParamEntry> entries_;
};

// N(0, std) initializer used for conv weights.
Tensor normal_init(int n, int c, int h, int w, Scalar stddev, Rng& rng);
Tensor constant_init(int n, int c, int h, int w, Scalar value);

}  // namespace anogen::nn
