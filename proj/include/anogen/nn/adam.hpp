#pragma once

#include <map>

#include "anogen/nn/autodiff.hpp"

namespace anogen::nn {

struct AdamConfig {
  Scalar beta1 = 0.5;  // GAN-friendly default
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
};

// Adam with bias correction. Moment buffers are keyed by parameter name
// so optimizer state serializes alongside checkpoints.
class Adam {
 public:
  using Config = AdamConfig;

  explicit Adam(Config config = {}) : config_(config) {}

  void step(ParamSet& params, Scalar lr);

  long steps_taken() const { return t_; }

  struct State {
    long t = 0;
    std::map<std::string, Tensor::Matrix> m, v;
  };
  State& state() { return state_; }
  const State& state() const { return state_; }
  void restore(State s) {
    state_ = std::move(s);
    t_ = state_.t;
  }

 private:
  Config config_;
  State state_;
  long t_ = 0;
};

inline void Adam::step(ParamSet& params, Scalar lr) {
  ++t_;
  state_.t = t_;
  const Scalar bc1 = 1.0 - std::pow(config_.beta1, static_cast<Scalar>(t_));
  const Scalar bc2 = 1.0 - std::pow(config_.beta2, static_cast<Scalar>(t_));
  for (const auto& entry : params.entries()) {
    Node& p = *entry.var;
    if (!p.grad_ready) continue;
    auto& m = state_.m[entry.name];
    auto& v = state_.v[entry.name];
    if (m.size() == 0) {
      m = Tensor::Matrix::Zero(p.value.data.rows(), p.value.data.cols());
      v = Tensor::Matrix::Zero(p.value.data.rows(), p.value.data.cols());
    }
    m = config_.beta1 * m + (1.0 - config_.beta1) * p.grad.data;
    v = (config_.beta2 * v.array() +
         (1.0 - config_.beta2) * p.grad.data.array().square())
            .matrix();
    p.value.data.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config_.eps);
  }
}

}  // namespace anogen::nn
