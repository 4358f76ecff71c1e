#pragma once

#include <array>
#include <vector>

#include "siamte/errors.hpp"
#include "siamte/tensor.hpp"

namespace siamte {

// Periodized orthogonal Daubechies-8 (db4) filter bank. Circular convolution
// keeps the transform orthonormal, so analysis/synthesis reconstruct exactly
// for any even length.
namespace wav {

constexpr std::array<double, 8> kLo = {
    0.23037781330885523,  0.7148465705525415,   0.6308807679295904,  -0.02798376941698385,
    -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278};

inline std::array<double, 8> highpass() {
  std::array<double, 8> hi{};
  for (int k = 0; k < 8; ++k) hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * kLo[7 - k];
  return hi;
}

/// One analysis step along a strided 1-D signal of even length n:
/// approx[i] = sum_k lo[k] x[(2i+k) mod n], detail likewise with hi.
inline void analyze(const double* x, int n, int stride, double* approx, double* detail,
                    int out_stride) {
  static const std::array<double, 8> hi = highpass();
  int half = n / 2;
  for (int i = 0; i < half; ++i) {
    double a = 0.0, d = 0.0;
    for (int k = 0; k < 8; ++k) {
      double v = x[size_t((2 * i + k) % n) * stride];
      a += kLo[k] * v;
      d += hi[k] * v;
    }
    approx[size_t(i) * out_stride] = a;
    detail[size_t(i) * out_stride] = d;
  }
}

/// Matching synthesis: x[(2i+k) mod n] += lo[k] a[i] + hi[k] d[i].
inline void synthesize(const double* approx, const double* detail, int in_stride, double* x, int n,
                       int stride) {
  static const std::array<double, 8> hi = highpass();
  for (int j = 0; j < n; ++j) x[size_t(j) * stride] = 0.0;
  int half = n / 2;
  for (int i = 0; i < half; ++i) {
    double a = approx[size_t(i) * in_stride];
    double d = detail[size_t(i) * in_stride];
    for (int k = 0; k < 8; ++k) x[size_t((2 * i + k) % n) * stride] += kLo[k] * a + hi[k] * d;
  }
}

}  // namespace wav

/// Multi-level 2-D wavelet pyramid of a single-channel tensor. Subbands are
/// stored finest level first; ll is the coarsest approximation.
struct WaveletPyramid {
  struct Band {
    Tensor lh, hl, hh;
  };
  int h0 = 0, w0 = 0;
  std::vector<Band> bands;
  Tensor ll;

  int levels() const { return int(bands.size()); }
};

inline WaveletPyramid dwt2(const Tensor& img, int levels) {
  if (img.c != 1) throw ConfigError("dwt2 expects a single channel");
  if (levels < 1) throw ConfigError("dwt2 needs >= 1 level");
  if (img.h % (1 << levels) || img.w % (1 << levels))
    throw ConfigError("dwt2 dims must be divisible by 2^levels: " + img.shape_str());

  WaveletPyramid pyr;
  pyr.h0 = img.h;
  pyr.w0 = img.w;
  Tensor cur = img;
  for (int lv = 0; lv < levels; ++lv) {
    int h = cur.h, w = cur.w, hh = h / 2, hw = w / 2;
    Tensor rows(1, h, w);
    std::vector<double> abuf(size_t(std::max(h, w)) / 2), dbuf(size_t(std::max(h, w)) / 2);
    for (int y = 0; y < h; ++y) {
      wav::analyze(cur.data.data() + size_t(y) * w, w, 1, abuf.data(), dbuf.data(), 1);
      for (int x = 0; x < hw; ++x) {
        rows.at(0, y, x) = abuf[x];
        rows.at(0, y, hw + x) = dbuf[x];
      }
    }
    Tensor quad(1, h, w);
    for (int x = 0; x < w; ++x) {
      wav::analyze(rows.data.data() + x, h, w, abuf.data(), dbuf.data(), 1);
      for (int y = 0; y < hh; ++y) {
        quad.at(0, y, x) = abuf[y];
        quad.at(0, hh + y, x) = dbuf[y];
      }
    }
    WaveletPyramid::Band band;
    band.lh = quad.crop(0, hw, hh, hw);
    band.hl = quad.crop(hh, 0, hh, hw);
    band.hh = quad.crop(hh, hw, hh, hw);
    pyr.bands.push_back(std::move(band));
    cur = quad.crop(0, 0, hh, hw);
  }
  pyr.ll = std::move(cur);
  return pyr;
}

inline Tensor idwt2(const WaveletPyramid& pyr) {
  Tensor cur = pyr.ll;
  for (int lv = pyr.levels() - 1; lv >= 0; --lv) {
    const auto& band = pyr.bands[lv];
    int hh = cur.h, hw = cur.w, h = hh * 2, w = hw * 2;
    Tensor quad(1, h, w);
    for (int y = 0; y < hh; ++y)
      for (int x = 0; x < hw; ++x) {
        quad.at(0, y, x) = cur.at(0, y, x);
        quad.at(0, y, hw + x) = band.lh.at(0, y, x);
        quad.at(0, hh + y, x) = band.hl.at(0, y, x);
        quad.at(0, hh + y, hw + x) = band.hh.at(0, y, x);
      }
    Tensor cols(1, h, w);
    std::vector<double> xbuf(size_t(std::max(h, w)));
    for (int x = 0; x < w; ++x) {
      wav::synthesize(quad.data.data() + x, quad.data.data() + size_t(hh) * w + x, w, xbuf.data(),
                      h, 1);
      for (int y = 0; y < h; ++y) cols.at(0, y, x) = xbuf[y];
    }
    Tensor out(1, h, w);
    for (int y = 0; y < h; ++y) {
      wav::synthesize(cols.data.data() + size_t(y) * w, cols.data.data() + size_t(y) * w + hw, 1,
                      xbuf.data(), w, 1);
      for (int x = 0; x < w; ++x) out.at(0, y, x) = xbuf[x];
    }
    cur = std::move(out);
  }
  return cur;
}

}  // namespace siamte
