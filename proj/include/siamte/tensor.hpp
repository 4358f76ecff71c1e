#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace siamte {

/// Dense planar CHW array of doubles. Used both for images (display range
/// [0,255]) and for network activations; the meaning of the values is a
/// convention of the caller, not of the container.
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), data(size_t(c_) * h_ * w_, 0.0) {
    if (c_ < 0 || h_ < 0 || w_ < 0) throw std::invalid_argument("negative tensor dims");
  }

  static Tensor zeros(int c, int h, int w) { return Tensor(c, h, w); }
  static Tensor full(int c, int h, int w, double v) {
    Tensor t(c, h, w);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  size_t size() const { return data.size(); }
  int plane() const { return h * w; }
  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
  std::string shape_str() const {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }

  double& at(int ci, int y, int x) { return data[(size_t(ci) * h + y) * w + x]; }
  double at(int ci, int y, int x) const { return data[(size_t(ci) * h + y) * w + x]; }

  double* channel(int ci) { return data.data() + size_t(ci) * plane(); }
  const double* channel(int ci) const { return data.data() + size_t(ci) * plane(); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double min() const { return *std::min_element(data.begin(), data.end()); }
  double max() const { return *std::max_element(data.begin(), data.end()); }

  double mean() const {
    double s = 0.0;
    for (double v : data) s += v;
    return data.empty() ? 0.0 : s / double(data.size());
  }

  Tensor& clamp_(double lo, double hi) {
    for (double& v : data) v = std::min(hi, std::max(lo, v));
    return *this;
  }

  Tensor crop(int y0, int x0, int hh, int ww) const {
    if (y0 < 0 || x0 < 0 || y0 + hh > h || x0 + ww > w)
      throw std::out_of_range("crop window outside tensor");
    Tensor out(c, hh, ww);
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < hh; ++y)
        for (int x = 0; x < ww; ++x) out.at(ci, y, x) = at(ci, y0 + y, x0 + x);
    return out;
  }

  /// Crop of size hh x ww centered on the image (upper-left bias on odd slack).
  Tensor center_crop(int hh, int ww) const {
    if (hh > h || ww > w) throw std::out_of_range("center crop larger than tensor");
    return crop((h - hh) / 2, (w - ww) / 2, hh, ww);
  }

  /// Rec.601 luma; result has a single channel. Identity on 1-channel input.
  Tensor luminance() const {
    if (c == 1) return *this;
    if (c != 3) throw std::invalid_argument("luminance needs 1 or 3 channels");
    Tensor out(1, h, w);
    const double* r = channel(0);
    const double* g = channel(1);
    const double* b = channel(2);
    for (int i = 0; i < plane(); ++i) out.data[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return out;
  }

  Tensor& operator+=(const Tensor& o) {
    check_same(o);
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    check_same(o);
    for (size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (double& v : data) v *= s;
    return *this;
  }

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

 private:
  void check_same(const Tensor& o) const {
    if (!same_shape(o))
      throw std::invalid_argument("tensor shape mismatch: " + shape_str() + " vs " + o.shape_str());
  }
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

/// Quantize to the nearest 8-bit level, staying in double storage.
inline Tensor quantize_u8(Tensor t) {
  for (double& v : t.data) v = std::min(255.0, std::max(0.0, std::nearbyint(v)));
  return t;
}

}  // namespace siamte
