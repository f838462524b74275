#include "anogen/nn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace anogen::nn {

Var make_leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

Var detach(const Var& x) { return make_leaf(x->value, false); }

namespace {

Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->parents = std::move(parents);
  for (const auto& p : node->parents)
    node->requires_grad = node->requires_grad || p->requires_grad;
  if (node->requires_grad) node->backprop = std::move(backprop);
  return node;
}

void accumulate(const Var& parent, const Tensor::Matrix& grad) {
  if (!parent->requires_grad) return;
  parent->ensure_grad();
  parent->grad.data += grad;
}

}  // namespace

void backward(const Var& loss) {
  if (loss->value.size() != 1)
    throw DimensionError("backward expects a scalar loss node");
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Var, std::size_t>> stack{{loss, 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next == 0 && visited.count(node.get())) {
      stack.pop_back();
      continue;
    }
    if (next < node->parents.size()) {
      Var child = node->parents[next++];
      if (!visited.count(child.get())) stack.emplace_back(child, 0);
    } else {
      visited.insert(node.get());
      order.push_back(node.get());
      stack.pop_back();
    }
  }
  loss->ensure_grad();
  loss->grad.data(0, 0) += 1;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->grad_ready) n->backprop(*n);
  }
}

// ---- convolution ----

namespace {

struct ConvDims {
  int oh, ow;
};

ConvDims conv_dims(const Tensor& x, int k, int stride, int pad) {
  const int oh = (x.h + 2 * pad - k) / stride + 1;
  const int ow = (x.w + 2 * pad - k) / stride + 1;
  if (oh <= 0 || ow <= 0) throw DimensionError("conv output would be empty");
  return {oh, ow};
}

// Range of ox with in-bounds input column for a given kernel tap.
struct OxRange {
  int lo, hi;  // half-open
};

inline OxRange ox_range(int w, int ow, int stride, int pad, int kx) {
  // need 0 <= ox*stride - pad + kx < w
  int lo = 0;
  if (pad - kx > 0) lo = (pad - kx + stride - 1) / stride;
  int hi = ow;
  const int limit = w - 1 + pad - kx;  // ox*stride <= limit
  if (limit < 0) return {0, 0};
  hi = std::min(hi, limit / stride + 1);
  return {lo, std::max(lo, hi)};
}

// Columns for one sample: (ci*k*k, oh*ow). Inner copies run over
// contiguous (stride 1) or strided segments.
void im2col(const Tensor& x, int sample, int k, int stride, int pad,
            const ConvDims& d, Tensor::Matrix& cols) {
  using StrideT = Eigen::InnerStride<>;
  using VecMap = Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>,
                            0, StrideT>;
  const int ci = x.c;
  cols.setZero(ci * k * k, d.oh * d.ow);
  for (int c = 0; c < ci; ++c) {
    const Scalar* row = x.data.row(sample * ci + c).data();
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const int crow = (c * k + ky) * k + kx;
        const OxRange r = ox_range(x.w, d.ow, stride, pad, kx);
        if (r.lo >= r.hi) continue;
        const int len = r.hi - r.lo;
        for (int oy = 0; oy < d.oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= x.h) continue;
          const Scalar* src = row + iy * x.w + (r.lo * stride - pad + kx);
          cols.row(crow).segment(oy * d.ow + r.lo, len) =
              VecMap(src, len, StrideT(stride));
        }
      }
  }
}

void col2im_accumulate(const Tensor::Matrix& cols, int sample, int k,
                       int stride, int pad, const ConvDims& d, Tensor& dx) {
  using StrideT = Eigen::InnerStride<>;
  using VecMap =
      Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>, 0, StrideT>;
  const int ci = dx.c;
  for (int c = 0; c < ci; ++c) {
    Scalar* row = dx.data.row(sample * ci + c).data();
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const int crow = (c * k + ky) * k + kx;
        const OxRange r = ox_range(dx.w, d.ow, stride, pad, kx);
        if (r.lo >= r.hi) continue;
        const int len = r.hi - r.lo;
        for (int oy = 0; oy < d.oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= dx.h) continue;
          Scalar* dst = row + iy * dx.w + (r.lo * stride - pad + kx);
          VecMap(dst, len, StrideT(stride)) +=
              cols.row(crow).segment(oy * d.ow + r.lo, len);
        }
      }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias,
           const ConvSpec& spec) {
  const Tensor& in = x->value;
  const Tensor& w = weight->value;
  if (w.c != in.c)
    throw DimensionError("conv2d weight channels do not match input");
  if (w.h != spec.kernel || w.w != spec.kernel)
    throw DimensionError("conv2d weight kernel mismatch");
  const int co = w.n;
  if (bias->value.c != co) throw DimensionError("conv2d bias mismatch");
  const ConvDims d = conv_dims(in, spec.kernel, spec.stride, spec.pad);

  // Weight rows are [out][in][k*k] contiguous, i.e. a (co, ci*k*k) view.
  Eigen::Map<const Tensor::Matrix> wmat(w.data.data(), co,
                                        in.c * spec.kernel * spec.kernel);
  Tensor out(in.n, co, d.oh, d.ow);
  Tensor::Matrix cols;
  for (int s = 0; s < in.n; ++s) {
    im2col(in, s, spec.kernel, spec.stride, spec.pad, d, cols);
    out.sample(s).noalias() = wmat * cols;
    for (int o = 0; o < co; ++o)
      out.channel(s, o).array() += bias->value.data(o, 0);
  }

  ConvSpec sp = spec;
  return make_op(std::move(out), {x, weight, bias}, [sp, d](Node& node) {
    const Var& px = node.parents[0];
    const Var& pw = node.parents[1];
    const Var& pb = node.parents[2];
    const Tensor& in = px->value;
    const int co = pw->value.n;
    Eigen::Map<const Tensor::Matrix> wmat(pw->value.data.data(), co,
                                          in.c * sp.kernel * sp.kernel);
    Tensor::Matrix cols;
    Tensor::Matrix dW = Tensor::Matrix::Zero(co, in.c * sp.kernel * sp.kernel);
    if (px->requires_grad) px->ensure_grad();
    for (int s = 0; s < in.n; ++s) {
      const auto dY = node.grad.sample(s);
      if (pw->requires_grad || pb->requires_grad)
        im2col(in, s, sp.kernel, sp.stride, sp.pad, d, cols);
      if (pw->requires_grad) dW.noalias() += dY * cols.transpose();
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int o = 0; o < co; ++o)
          pb->grad.data(o, 0) += dY.row(o).sum();
      }
      if (px->requires_grad) {
        Tensor::Matrix dcols = wmat.transpose() * dY;
        col2im_accumulate(dcols, s, sp.kernel, sp.stride, sp.pad, d, px->grad);
      }
    }
    if (pw->requires_grad) {
      pw->ensure_grad();
      Eigen::Map<Tensor::Matrix> dwview(pw->grad.data.data(), co,
                                        in.c * sp.kernel * sp.kernel);
      dwview += dW;
    }
  });
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, Scalar eps) {
  const Tensor& in = x->value;
  if (gamma->value.c != in.c || beta->value.c != in.c)
    throw DimensionError("instance_norm affine params mismatch");
  const int rows = in.n * in.c;
  const Scalar count = static_cast<Scalar>(in.h * in.w);

  auto xhat = std::make_shared<Tensor::Matrix>(rows, in.h * in.w);
  auto inv_std = std::make_shared<Eigen::VectorXd>(rows);
  Tensor out(in.n, in.c, in.h, in.w);
  for (int r = 0; r < rows; ++r) {
    const Scalar mu = in.data.row(r).mean();
    const Scalar var =
        (in.data.row(r).array() - mu).square().sum() / count;
    const Scalar istd = Scalar(1) / std::sqrt(var + eps);
    (*inv_std)(r) = istd;
    xhat->row(r) = (in.data.row(r).array() - mu) * istd;
    const int ch = r % in.c;
    out.data.row(r) = xhat->row(r) * gamma->value.data(ch, 0) +
                      Tensor::Matrix::Constant(1, in.h * in.w,
                                               beta->value.data(ch, 0));
  }

  return make_op(std::move(out), {x, gamma, beta},
                 [xhat, inv_std, count](Node& node) {
    const Var& px = node.parents[0];
    const Var& pg = node.parents[1];
    const Var& pbeta = node.parents[2];
    const Tensor& in = px->value;
    const int rows = in.n * in.c;
    if (px->requires_grad) px->ensure_grad();
    if (pg->requires_grad) pg->ensure_grad();
    if (pbeta->requires_grad) pbeta->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      const int ch = r % in.c;
      const auto dy = node.grad.data.row(r).array();
      const auto xh = xhat->row(r).array();
      if (pg->requires_grad) pg->grad.data(ch, 0) += (dy * xh).sum();
      if (pbeta->requires_grad) pbeta->grad.data(ch, 0) += dy.sum();
      if (px->requires_grad) {
        const Scalar g = pg->value.data(ch, 0);
        const auto dxhat = dy * g;
        const Scalar mean_dxhat = dxhat.sum() / count;
        const Scalar mean_dxhat_xhat = (dxhat * xh).sum() / count;
        px->grad.data.row(r).array() +=
            (*inv_std)(r) * (dxhat - mean_dxhat - xh * mean_dxhat_xhat);
      }
    }
  });
}

namespace {

template <typename Fwd, typename Bwd>
Var elementwise(const Var& x, Fwd fwd, Bwd bwd) {
  Tensor out = x->value;
  out.data = fwd(x->value.data.array()).matrix();
  return make_op(std::move(out), {x}, [bwd](Node& node) {
    const Var& px = node.parents[0];
    if (!px->requires_grad) return;
    px->ensure_grad();
    px->grad.data.array() +=
        node.grad.data.array() * bwd(px->value.data.array(), node.value.data.array());
  });
}

}  // namespace

Var relu(const Var& x) {
  return elementwise(
      x, [](const auto& v) { return v.max(0.0); },
      [](const auto& in, const auto&) { return (in > 0.0).template cast<Scalar>(); });
}

Var leaky_relu(const Var& x, Scalar slope) {
  return elementwise(
      x,
      [slope](const auto& v) { return v.max(v * slope); },
      [slope](const auto& in, const auto&) {
        return (in > 0.0).template cast<Scalar>() * (1.0 - slope) + slope;
      });
}

Var tanh(const Var& x) {
  return elementwise(
      x, [](const auto& v) { return v.tanh(); },
      [](const auto&, const auto& out) { return 1.0 - out.square(); });
}

Var sigmoid(const Var& x) {
  return elementwise(
      x, [](const auto& v) { return 0.5 * (0.5 * v).tanh() + 0.5; },
      [](const auto&, const auto& out) { return out * (1.0 - out); });
}

Var upsample_nearest2(const Var& x) {
  const Tensor& in = x->value;
  Tensor out(in.n, in.c, in.h * 2, in.w * 2);
  for (int r = 0; r < in.n * in.c; ++r)
    for (int y = 0; y < out.h; ++y)
      for (int xx = 0; xx < out.w; ++xx)
        out.data(r, y * out.w + xx) = in.data(r, (y / 2) * in.w + xx / 2);
  return make_op(std::move(out), {x}, [](Node& node) {
    const Var& px = node.parents[0];
    if (!px->requires_grad) return;
    px->ensure_grad();
    const Tensor& in = px->value;
    const int ow = in.w * 2;
    for (int r = 0; r < in.n * in.c; ++r)
      for (int y = 0; y < in.h * 2; ++y)
        for (int xx = 0; xx < ow; ++xx)
          px->grad.data(r, (y / 2) * in.w + xx / 2) +=
              node.grad.data(r, y * ow + xx);
  });
}

Var avg_pool2(const Var& x) {
  const Tensor& in = x->value;
  if (in.h % 2 != 0 || in.w % 2 != 0)
    throw DimensionError("avg_pool2 needs even spatial dims");
  Tensor out(in.n, in.c, in.h / 2, in.w / 2);
  for (int r = 0; r < in.n * in.c; ++r)
    for (int y = 0; y < out.h; ++y)
      for (int xx = 0; xx < out.w; ++xx) {
        const int base = 2 * y * in.w + 2 * xx;
        out.data(r, y * out.w + xx) =
            0.25 * (in.data(r, base) + in.data(r, base + 1) +
                    in.data(r, base + in.w) + in.data(r, base + in.w + 1));
      }
  return make_op(std::move(out), {x}, [](Node& node) {
    const Var& px = node.parents[0];
    if (!px->requires_grad) return;
    px->ensure_grad();
    const Tensor& in = px->value;
    const int ow = in.w / 2;
    for (int r = 0; r < in.n * in.c; ++r)
      for (int y = 0; y < in.h / 2; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          const Scalar g = 0.25 * node.grad.data(r, y * ow + xx);
          const int base = 2 * y * in.w + 2 * xx;
          px->grad.data(r, base) += g;
          px->grad.data(r, base + 1) += g;
          px->grad.data(r, base + in.w) += g;
          px->grad.data(r, base + in.w + 1) += g;
        }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  const Tensor& ta = a->value;
  const Tensor& tb = b->value;
  if (ta.n != tb.n || ta.h != tb.h || ta.w != tb.w)
    throw DimensionError("concat_channels shape mismatch");
  Tensor out(ta.n, ta.c + tb.c, ta.h, ta.w);
  for (int s = 0; s < ta.n; ++s) {
    out.sample(s).topRows(ta.c) = ta.sample(s);
    out.sample(s).bottomRows(tb.c) = tb.sample(s);
  }
  return make_op(std::move(out), {a, b}, [](Node& node) {
    const Var& pa = node.parents[0];
    const Var& pb = node.parents[1];
    const int ca = pa->value.c, cb = pb->value.c;
    for (int s = 0; s < pa->value.n; ++s) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        pa->grad.sample(s) += node.grad.sample(s).topRows(ca);
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        pb->grad.sample(s) += node.grad.sample(s).bottomRows(cb);
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw DimensionError("add shape mismatch");
  Tensor out = a->value;
  out.data += b->value.data;
  return make_op(std::move(out), {a, b}, [](Node& node) {
    accumulate(node.parents[0], node.grad.data);
    accumulate(node.parents[1], node.grad.data);
  });
}

Var sub(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw DimensionError("sub shape mismatch");
  Tensor out = a->value;
  out.data -= b->value.data;
  return make_op(std::move(out), {a, b}, [](Node& node) {
    accumulate(node.parents[0], node.grad.data);
    accumulate(node.parents[1], -node.grad.data);
  });
}

Var mul(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) throw DimensionError("mul shape mismatch");
  Tensor out = a->value;
  out.data.array() *= b->value.data.array();
  return make_op(std::move(out), {a, b}, [](Node& node) {
    accumulate(node.parents[0],
               (node.grad.data.array() * node.parents[1]->value.data.array())
                   .matrix());
    accumulate(node.parents[1],
               (node.grad.data.array() * node.parents[0]->value.data.array())
                   .matrix());
  });
}

Var scale(const Var& x, Scalar s) {
  Tensor out = x->value;
  out.data *= s;
  return make_op(std::move(out), {x}, [s](Node& node) {
    accumulate(node.parents[0], (node.grad.data * s).eval());
  });
}

Var broadcast_channel(const Var& x, int channels) {
  const Tensor& in = x->value;
  if (in.c != 1) throw DimensionError("broadcast_channel expects 1 channel");
  Tensor out(in.n, channels, in.h, in.w);
  for (int s = 0; s < in.n; ++s)
    for (int c = 0; c < channels; ++c)
      out.channel(s, c) = in.channel(s, 0);
  return make_op(std::move(out), {x}, [channels](Node& node) {
    const Var& px = node.parents[0];
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (int s = 0; s < px->value.n; ++s)
      for (int c = 0; c < channels; ++c)
        px->grad.channel(s, 0) += node.grad.channel(s, c);
  });
}

Var fuse_blend(const Var& content, const Var& source, const Var& map) {
  Var m = content->value.c == 1 ? map : broadcast_channel(map, content->value.c);
  return add(content, mul(m, sub(source, content)));
}

Var mean_abs_diff(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value))
    throw DimensionError("mean_abs_diff shape mismatch");
  const Scalar count = static_cast<Scalar>(a->value.size());
  Tensor out(1, 1, 1, 1);
  out.data(0, 0) = (a->value.data - b->value.data).array().abs().sum() / count;
  return make_op(std::move(out), {a, b}, [count](Node& node) {
    const Scalar g = node.grad.data(0, 0) / count;
    const auto sign = (node.parents[0]->value.data.array() -
                       node.parents[1]->value.data.array())
                          .sign();
    accumulate(node.parents[0], (g * sign).matrix());
    accumulate(node.parents[1], (-g * sign).matrix());
  });
}

Var mean_softplus(const Var& x, Scalar sign) {
  const Scalar count = static_cast<Scalar>(x->value.size());
  const auto z = (sign * x->value.data.array()).eval();
  Tensor out(1, 1, 1, 1);
  out.data(0, 0) = (z.max(0.0) + (-z.abs()).exp().log1p()).sum() / count;
  return make_op(std::move(out), {x}, [sign, count](Node& node) {
    const Var& px = node.parents[0];
    if (!px->requires_grad) return;
    px->ensure_grad();
    const Scalar g = node.grad.data(0, 0) * sign / count;
    const auto z = (sign * px->value.data.array()).eval();
    // sigmoid(z) evaluated stably
    px->grad.data.array() += g * (0.5 * (0.5 * z).tanh() + 0.5);
  });
}

Var add_scalars(const std::vector<Var>& terms,
                const std::vector<Scalar>& weights) {
  if (terms.empty() || terms.size() != weights.size())
    throw ParameterError("add_scalars needs matching terms and weights");
  Tensor out(1, 1, 1, 1);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i]->value.size() != 1)
      throw DimensionError("add_scalars expects scalar terms");
    out.data(0, 0) += weights[i] * terms[i]->value.data(0, 0);
  }
  std::vector<Scalar> w = weights;
  return make_op(std::move(out), terms, [w](Node& node) {
    for (std::size_t i = 0; i < node.parents.size(); ++i)
      if (node.parents[i]->requires_grad) {
        node.parents[i]->ensure_grad();
        node.parents[i]->grad.data(0, 0) += w[i] * node.grad.data(0, 0);
      }
  });
}

Var spatial_mean(const Var& x) {
  const Tensor& in = x->value;
  const Scalar count = static_cast<Scalar>(in.h * in.w);
  Tensor out(in.n, in.c, 1, 1);
  for (int r = 0; r < in.n * in.c; ++r) out.data(r, 0) = in.data.row(r).mean();
  return make_op(std::move(out), {x}, [count](Node& node) {
    const Var& px = node.parents[0];
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (int r = 0; r < px->value.n * px->value.c; ++r)
      px->grad.data.row(r).array() += node.grad.data(r, 0) / count;
  });
}

Var cross_entropy_logits(const Var& logits, const std::vector<int>& labels) {
  const Tensor& in = logits->value;
  if (in.h != 1 || in.w != 1)
    throw DimensionError("cross_entropy_logits expects (n, k, 1, 1) logits");
  if (static_cast<int>(labels.size()) != in.n)
    throw DimensionError("cross_entropy_logits label count mismatch");
  const int k = in.c;
  auto probs = std::make_shared<Tensor::Matrix>(in.n, k);
  Scalar loss = 0;
  for (int s = 0; s < in.n; ++s) {
    Eigen::VectorXd z(k);
    for (int c = 0; c < k; ++c) z(c) = in.data(s * k + c, 0);
    const Scalar zmax = z.maxCoeff();
    const Eigen::VectorXd ez = (z.array() - zmax).exp();
    const Scalar denom = ez.sum();
    probs->row(s) = (ez / denom).transpose();
    const int label = labels[static_cast<std::size_t>(s)];
    if (label < 0 || label >= k) throw InputError("label out of range");
    loss -= std::log(std::max(1e-300, (*probs)(s, label)));
  }
  Tensor out(1, 1, 1, 1);
  out.data(0, 0) = loss / in.n;
  std::vector<int> labs = labels;
  return make_op(std::move(out), {logits}, [probs, labs](Node& node) {
    const Var& px = node.parents[0];
    if (!px->requires_grad) return;
    px->ensure_grad();
    const int k = px->value.c;
    const Scalar g = node.grad.data(0, 0) / px->value.n;
    for (int s = 0; s < px->value.n; ++s)
      for (int c = 0; c < k; ++c) {
        const Scalar target = labs[static_cast<std::size_t>(s)] == c ? 1.0 : 0.0;
        px->grad.data(s * k + c, 0) += g * ((*probs)(s, c) - target);
      }
  });
}

Var bce_logits_mean(const Var& logits, const Tensor& targets) {
  const Tensor& in = logits->value;
  if (!in.same_shape(targets))
    throw DimensionError("bce_logits_mean shape mismatch");
  const Scalar count = static_cast<Scalar>(in.size());
  // -[t log sig(x) + (1-t) log(1-sig(x))] = softplus(x) - t*x
  const auto z = in.data.array();
  Tensor out(1, 1, 1, 1);
  out.data(0, 0) =
      ((z.max(0.0) + (-z.abs()).exp().log1p()) - targets.data.array() * z)
          .sum() /
      count;
  auto tgt = std::make_shared<Tensor::Matrix>(targets.data);
  return make_op(std::move(out), {logits}, [tgt, count](Node& node) {
    const Var& px = node.parents[0];
    if (!px->requires_grad) return;
    px->ensure_grad();
    const Scalar g = node.grad.data(0, 0) / count;
    const auto z = px->value.data.array();
    px->grad.data.array() +=
        g * ((0.5 * (0.5 * z).tanh() + 0.5) - tgt->array());
  });
}

Var ParamSet::add(const std::string& name, Tensor init) {
  for (const auto& e : entries_)
    if (e.name == name) throw InternalError("duplicate parameter " + name);
  Var var = make_leaf(std::move(init), true);
  entries_.push_back({name, var});
  return var;
}

Var ParamSet::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.var;
  throw InternalError("unknown parameter " + name);
}

void ParamSet::zero_grad() {
  for (auto& e : entries_) e.var->grad_ready = false;
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    n += static_cast<std::size_t>(e.var->value.size());
  return n;
}

Tensor normal_init(int n, int c, int h, int w, Scalar stddev, Rng& rng) {
  Tensor t(n, c, h, w);
  std::normal_distribution<Scalar> dist(0.0, stddev);
  for (int i = 0; i < t.data.rows(); ++i)
    for (int j = 0; j < t.data.cols(); ++j) t.data(i, j) = dist(rng);
  return t;
}

Tensor constant_init(int n, int c, int h, int w, Scalar value) {
  Tensor t(n, c, h, w);
  t.data.setConstant(value);
  return t;
}

}  // namespace anogen::nn
