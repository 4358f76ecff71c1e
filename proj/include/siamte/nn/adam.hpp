#pragma once

#include <cmath>
#include <vector>

#include "siamte/nn/layers.hpp"

namespace siamte::nn {

/// Adam over a fixed parameter set. The first-moment coefficient is the
/// "momentum factor" knob; defaults beta2 = 0.999, eps = 1e-8.
class Adam {
 public:
  Adam(std::vector<ParamView> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    size_t n = total_params(params_);
    m_.assign(n, 0.0);
    v_.assign(n, 0.0);
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    size_t off = 0;
    for (auto& p : params_) {
      for (size_t i = 0; i < p.n; ++i) {
        double g = p.grad[i];
        double& m = m_[off + i];
        double& v = v_[off + i];
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g * g;
        p.value[i] -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
      }
      off += p.n;
    }
  }

  void zero_grads() { nn::zero_grads(params_); }

 private:
  std::vector<ParamView> params_;
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace siamte::nn
