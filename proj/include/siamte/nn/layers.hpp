#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "siamte/errors.hpp"
#include "siamte/rng.hpp"
#include "siamte/tensor.hpp"

namespace siamte::nn {

/// Per-call activation storage. forward() pushes, backward() pops in LIFO
/// order, so several forwards may be in flight on one (shared-parameter)
/// network as long as each owns its tape — the Siamese branches of training
/// rely on exactly that.
struct Tape {
  std::vector<Tensor> tensors;
  std::vector<std::array<int, 3>> shapes;

  void push(Tensor t) { tensors.push_back(std::move(t)); }
  Tensor pop() {
    Tensor t = std::move(tensors.back());
    tensors.pop_back();
    return t;
  }
  void push_shape(int c, int h, int w) { shapes.push_back({c, h, w}); }
  std::array<int, 3> pop_shape() {
    auto s = shapes.back();
    shapes.pop_back();
    return s;
  }
  bool empty() const { return tensors.empty() && shapes.empty(); }
};

struct ParamView {
  double* value = nullptr;
  double* grad = nullptr;
  size_t n = 0;
};

/// Layers hold parameters plus a parallel gradient buffer. forward() is pure
/// given parameters; backward() accumulates into the (mutable) gradient
/// buffers when param_grads is set and is therefore a single-stream operation.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, Tape& tape) const = 0;
  virtual Tensor backward(const Tensor& gy, Tape& tape, bool param_grads) const = 0;
  virtual void init(Rng&) {}
  virtual void collect_params(std::vector<ParamView>&) {}
};

namespace detail {

/// Patch matrix of shape (oh*ow, c*k*k): one row per output position, columns
/// contiguous per (channel, dy, dx). Zero padding.
inline Eigen::MatrixXd im2col(const Tensor& x, int k, int stride, int pad, int oh, int ow) {
  Eigen::MatrixXd patches(size_t(oh) * ow, size_t(x.c) * k * k);
  for (int ci = 0; ci < x.c; ++ci) {
    const double* plane = x.channel(ci);
    for (int dy = 0; dy < k; ++dy)
      for (int dx = 0; dx < k; ++dx) {
        double* col = patches.data() + (size_t(ci) * k * k + size_t(dy) * k + dx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride + dy - pad;
          if (iy < 0 || iy >= x.h) {
            for (int ox = 0; ox < ow; ++ox) col[size_t(oy) * ow + ox] = 0.0;
            continue;
          }
          const double* row = plane + size_t(iy) * x.w;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride + dx - pad;
            col[size_t(oy) * ow + ox] = (ix >= 0 && ix < x.w) ? row[ix] : 0.0;
          }
        }
      }
  }
  return patches;
}

inline void col2im_accumulate(const Eigen::MatrixXd& gpatches, Tensor& gx, int k, int stride,
                              int pad, int oh, int ow) {
  for (int ci = 0; ci < gx.c; ++ci) {
    double* plane = gx.channel(ci);
    for (int dy = 0; dy < k; ++dy)
      for (int dx = 0; dx < k; ++dx) {
        const double* col = gpatches.data() + (size_t(ci) * k * k + size_t(dy) * k + dx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride + dy - pad;
          if (iy < 0 || iy >= gx.h) continue;
          double* row = plane + size_t(iy) * gx.w;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride + dx - pad;
            if (ix >= 0 && ix < gx.w) row[ix] += col[size_t(oy) * ow + ox];
          }
        }
      }
  }
}

}  // namespace detail

class Conv2d : public Layer {
 public:
  Conv2d(int in_c, int out_c, int k = 3, int stride = 1, int pad = 1, bool zero_init = false)
      : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad), zero_init_(zero_init) {
    if (in_c < 1 || out_c < 1 || k < 1 || stride < 1 || pad < 0)
      throw ConfigError("invalid conv configuration");
    weight_ = Eigen::MatrixXd::Zero(out_c, size_t(in_c) * k * k);
    bias_ = Eigen::VectorXd::Zero(out_c);
    gweight_ = Eigen::MatrixXd::Zero(out_c, size_t(in_c) * k * k);
    gbias_ = Eigen::VectorXd::Zero(out_c);
  }

  void init(Rng& rng) override {
    if (zero_init_) {
      weight_.setZero();
    } else {
      double std = std::sqrt(2.0 / (double(in_c_) * k_ * k_));
      for (Eigen::Index i = 0; i < weight_.size(); ++i) weight_.data()[i] = rng.normal(0.0, std);
    }
    bias_.setZero();
  }

  Tensor forward(const Tensor& x, Tape& tape) const override {
    if (x.c != in_c_) throw ConfigError("conv expects " + std::to_string(in_c_) + " channels");
    int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
    int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
    if (oh < 1 || ow < 1) throw ConfigError("input too small for conv: " + x.shape_str());
    Eigen::MatrixXd patches = detail::im2col(x, k_, stride_, pad_, oh, ow);
    Eigen::MatrixXd yt = patches * weight_.transpose();  // (oh*ow, out_c)
    Tensor y(out_c_, oh, ow);
    for (int o = 0; o < out_c_; ++o) {
      const double* src = yt.data() + size_t(o) * oh * ow;
      double* dst = y.channel(o);
      double b = bias_(o);
      for (int i = 0; i < oh * ow; ++i) dst[i] = src[i] + b;
    }
    tape.push(x);
    return y;
  }

  Tensor backward(const Tensor& gy, Tape& tape, bool param_grads) const override {
    Tensor x = tape.pop();
    int oh = gy.h, ow = gy.w;
    Eigen::MatrixXd gyt(size_t(oh) * ow, out_c_);
    for (int o = 0; o < out_c_; ++o)
      std::copy(gy.channel(o), gy.channel(o) + size_t(oh) * ow, gyt.data() + size_t(o) * oh * ow);
    Eigen::MatrixXd patches = detail::im2col(x, k_, stride_, pad_, oh, ow);
    if (param_grads) {
      gweight_ += gyt.transpose() * patches;
      gbias_ += gyt.colwise().sum().transpose();
    }
    Eigen::MatrixXd gpatches = gyt * weight_;  // (oh*ow, in_c*k*k)
    Tensor gx(x.c, x.h, x.w);
    detail::col2im_accumulate(gpatches, gx, k_, stride_, pad_, oh, ow);
    return gx;
  }

  void collect_params(std::vector<ParamView>& out) override {
    out.push_back({weight_.data(), gweight_.data(), size_t(weight_.size())});
    out.push_back({bias_.data(), gbias_.data(), size_t(bias_.size())});
  }

  size_t parameter_count() const { return size_t(weight_.size()) + size_t(bias_.size()); }

 private:
  int in_c_, out_c_, k_, stride_, pad_;
  bool zero_init_;
  Eigen::MatrixXd weight_;
  Eigen::VectorXd bias_;
  mutable Eigen::MatrixXd gweight_;
  mutable Eigen::VectorXd gbias_;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, Tape& tape) const override {
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    tape.push(x);
    return y;
  }
  Tensor backward(const Tensor& gy, Tape& tape, bool) const override {
    Tensor x = tape.pop();
    Tensor gx = gy;
    for (size_t i = 0; i < gx.data.size(); ++i)
      if (x.data[i] <= 0.0) gx.data[i] = 0.0;
    return gx;
  }
};

class Scale : public Layer {
 public:
  explicit Scale(double s) : s_(s) {}
  Tensor forward(const Tensor& x, Tape&) const override { return x * s_; }
  Tensor backward(const Tensor& gy, Tape&, bool) const override { return gy * s_; }

 private:
  double s_;
};

class GlobalAvgPool : public Layer {
 public:
  Tensor forward(const Tensor& x, Tape& tape) const override {
    Tensor y(x.c, 1, 1);
    for (int ci = 0; ci < x.c; ++ci) {
      const double* p = x.channel(ci);
      double s = 0.0;
      for (int i = 0; i < x.plane(); ++i) s += p[i];
      y.data[ci] = s / double(x.plane());
    }
    tape.push_shape(x.c, x.h, x.w);
    return y;
  }
  Tensor backward(const Tensor& gy, Tape& tape, bool) const override {
    auto [c, h, w] = tape.pop_shape();
    Tensor gx(c, h, w);
    for (int ci = 0; ci < c; ++ci) {
      double g = gy.data[ci] / double(h * w);
      double* p = gx.channel(ci);
      for (int i = 0; i < h * w; ++i) p[i] = g;
    }
    return gx;
  }
};

class Dense : public Layer {
 public:
  Dense(int in_f, int out_f) : in_f_(in_f), out_f_(out_f) {
    weight_ = Eigen::MatrixXd::Zero(out_f, in_f);
    bias_ = Eigen::VectorXd::Zero(out_f);
    gweight_ = Eigen::MatrixXd::Zero(out_f, in_f);
    gbias_ = Eigen::VectorXd::Zero(out_f);
  }

  void init(Rng& rng) override {
    double std = std::sqrt(2.0 / double(in_f_));
    for (Eigen::Index i = 0; i < weight_.size(); ++i) weight_.data()[i] = rng.normal(0.0, std);
    bias_.setZero();
  }

  Tensor forward(const Tensor& x, Tape& tape) const override {
    if (int(x.size()) != in_f_) throw ConfigError("dense expects " + std::to_string(in_f_) + " inputs");
    Eigen::Map<const Eigen::VectorXd> xv(x.data.data(), in_f_);
    Eigen::VectorXd yv = weight_ * xv + bias_;
    Tensor y(out_f_, 1, 1);
    std::copy(yv.data(), yv.data() + out_f_, y.data.begin());
    tape.push(x);
    return y;
  }

  Tensor backward(const Tensor& gy, Tape& tape, bool param_grads) const override {
    Tensor x = tape.pop();
    Eigen::Map<const Eigen::VectorXd> gyv(gy.data.data(), out_f_);
    Eigen::Map<const Eigen::VectorXd> xv(x.data.data(), in_f_);
    if (param_grads) {
      gweight_ += gyv * xv.transpose();
      gbias_ += gyv;
    }
    Eigen::VectorXd gxv = weight_.transpose() * gyv;
    Tensor gx(x.c, x.h, x.w);
    std::copy(gxv.data(), gxv.data() + in_f_, gx.data.begin());
    return gx;
  }

  void collect_params(std::vector<ParamView>& out) override {
    out.push_back({weight_.data(), gweight_.data(), size_t(weight_.size())});
    out.push_back({bias_.data(), gbias_.data(), size_t(bias_.size())});
  }

 private:
  int in_f_, out_f_;
  Eigen::MatrixXd weight_;
  Eigen::VectorXd bias_;
  mutable Eigen::MatrixXd gweight_;
  mutable Eigen::VectorXd gbias_;
};

class Sequential : public Layer {
 public:
  Sequential() = default;

  template <class L, class... Args>
  L& emplace(Args&&... args) {
    auto p = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *p;
    layers_.push_back(std::move(p));
    return ref;
  }

  void add(std::unique_ptr<Layer> l) { layers_.push_back(std::move(l)); }

  Tensor forward(const Tensor& x, Tape& tape) const override {
    Tensor cur = x;
    for (const auto& l : layers_) cur = l->forward(cur, tape);
    return cur;
  }

  Tensor backward(const Tensor& gy, Tape& tape, bool param_grads) const override {
    Tensor cur = gy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      cur = (*it)->backward(cur, tape, param_grads);
    return cur;
  }

  void init(Rng& rng) override {
    for (auto& l : layers_) l->init(rng);
  }

  void collect_params(std::vector<ParamView>& out) override {
    for (auto& l : layers_) l->collect_params(out);
  }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// y = x + inner(x).
class Residual : public Layer {
 public:
  explicit Residual(std::unique_ptr<Layer> inner) : inner_(std::move(inner)) {}

  Tensor forward(const Tensor& x, Tape& tape) const override {
    Tensor y = inner_->forward(x, tape);
    y += x;
    return y;
  }
  Tensor backward(const Tensor& gy, Tape& tape, bool param_grads) const override {
    Tensor gx = inner_->backward(gy, tape, param_grads);
    gx += gy;
    return gx;
  }
  void init(Rng& rng) override { inner_->init(rng); }
  void collect_params(std::vector<ParamView>& out) override { inner_->collect_params(out); }

 private:
  std::unique_ptr<Layer> inner_;
};

inline void zero_grads(std::vector<ParamView>& params) {
  for (auto& p : params) std::fill(p.grad, p.grad + p.n, 0.0);
}

inline size_t total_params(const std::vector<ParamView>& params) {
  size_t n = 0;
  for (const auto& p : params) n += p.n;
  return n;
}

}  // namespace siamte::nn
