#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siamte/errors.hpp"
#include "siamte/tensor.hpp"
#include "siamte/wavelet.hpp"

namespace siamte {

struct ResidualConfig {
  double sigma = 3.0;
  int max_levels = 4;

  nlohmann::json to_json() const { return {{"sigma", sigma}, {"max_levels", max_levels}}; }
  static ResidualConfig from_json(const nlohmann::json& j) {
    ResidualConfig c;
    c.sigma = j.value("sigma", c.sigma);
    c.max_levels = j.value("max_levels", c.max_levels);
    return c;
  }
};

namespace detail {

/// Mean of x over a centered win x win window clipped to the array bounds,
/// computed with an integral image.
inline Tensor box_mean(const Tensor& x, int win) {
  int h = x.h, w = x.w, r = win / 2;
  std::vector<double> integral((h + 1) * size_t(w + 1), 0.0);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      integral[size_t(y + 1) * (w + 1) + xx + 1] = x.at(0, y, xx) +
                                                   integral[size_t(y) * (w + 1) + xx + 1] +
                                                   integral[size_t(y + 1) * (w + 1) + xx] -
                                                   integral[size_t(y) * (w + 1) + xx];
  Tensor out(1, h, w);
  for (int y = 0; y < h; ++y) {
    int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
    for (int xx = 0; xx < w; ++xx) {
      int x0 = std::max(0, xx - r), x1 = std::min(w, xx + r + 1);
      double s = integral[size_t(y1) * (w + 1) + x1] - integral[size_t(y0) * (w + 1) + x1] -
                 integral[size_t(y1) * (w + 1) + x0] + integral[size_t(y0) * (w + 1) + x0];
      out.at(0, y, xx) = s / (double(y1 - y0) * double(x1 - x0));
    }
  }
  return out;
}

/// Local Wiener shrinkage of one detail subband: the signal variance is the
/// most conservative (smallest) estimate over window sizes {3,5,7,9}.
inline void wiener_shrink(Tensor& band, double noise_var) {
  Tensor sq(1, band.h, band.w);
  for (size_t i = 0; i < band.size(); ++i) sq.data[i] = band.data[i] * band.data[i];
  Tensor var = Tensor::full(1, band.h, band.w, std::numeric_limits<double>::infinity());
  for (int win : {3, 5, 7, 9}) {
    Tensor m = box_mean(sq, win);
    for (size_t i = 0; i < var.size(); ++i)
      var.data[i] = std::min(var.data[i], std::max(0.0, m.data[i] - noise_var));
  }
  for (size_t i = 0; i < band.size(); ++i)
    band.data[i] *= var.data[i] / (var.data[i] + noise_var);
}

inline Tensor denoise_channel(const Tensor& ch, const ResidualConfig& cfg, int levels) {
  WaveletPyramid pyr = dwt2(ch, levels);
  double nv = cfg.sigma * cfg.sigma;
  for (auto& band : pyr.bands) {
    wiener_shrink(band.lh, nv);
    wiener_shrink(band.hl, nv);
    wiener_shrink(band.hh, nv);
  }
  return idwt2(pyr);
}

}  // namespace detail

/// Decomposition depth adapted to the image: deep enough for the coarsest
/// band to stay a sensible size, capped by config.
inline int residual_levels(int h, int w, const ResidualConfig& cfg = {}) {
  int m = std::min(h, w);
  if (m < 16) throw ConfigError("image smaller than the filter support (min dim 16)");
  int lv = int(std::floor(std::log2(double(m) / 8.0)));
  return std::clamp(lv, 1, cfg.max_levels);
}

/// Wavelet-Wiener noise residual: image minus its denoised version,
/// zero-meaned. Color inputs are processed per channel and the residuals
/// averaged into one channel. The image is center-cropped to dimensions
/// divisible by 2^levels, so the output can be slightly smaller.
inline Tensor extract_noise_residual(const Tensor& image, const ResidualConfig& cfg = {}) {
  if (image.c != 1 && image.c != 3) throw ConfigError("residual extractor needs 1 or 3 channels");
  int levels = residual_levels(image.h, image.w, cfg);
  int mult = 1 << levels;
  int hh = (image.h / mult) * mult, ww = (image.w / mult) * mult;
  Tensor crop = image.center_crop(hh, ww);

  Tensor out(1, hh, ww);
  for (int ci = 0; ci < crop.c; ++ci) {
    Tensor ch(1, hh, ww);
    std::copy(crop.channel(ci), crop.channel(ci) + ch.size(), ch.data.data());
    Tensor den = detail::denoise_channel(ch, cfg, levels);
    for (size_t i = 0; i < out.size(); ++i) out.data[i] += (ch.data[i] - den.data[i]) / crop.c;
  }
  double m = out.mean();
  for (double& v : out.data) v -= m;
  if (!out.all_finite()) throw NumericError("non-finite residual");
  return out;
}

// ---------------------------------------------------------------------------
// Camera fingerprints: the mean residual of one camera's images, persisted
// with a "SIAMTE-FPR-1" header.
// ---------------------------------------------------------------------------

struct CameraFingerprint {
  std::string camera;
  int count = 0;
  Tensor residual;
};

inline CameraFingerprint build_fingerprint(const std::vector<Tensor>& residuals,
                                           const std::string& camera) {
  if (residuals.empty()) throw ConfigError("cannot build a fingerprint from zero residuals");
  CameraFingerprint fp;
  fp.camera = camera;
  fp.count = int(residuals.size());
  fp.residual = Tensor::zeros(residuals[0].c, residuals[0].h, residuals[0].w);
  for (const auto& r : residuals) {
    if (!r.same_shape(fp.residual))
      throw ConfigError("fingerprint residuals must share one shape");
    fp.residual += r;
  }
  fp.residual *= 1.0 / double(fp.count);
  return fp;
}

namespace fpr {
constexpr char kMagic[] = "SIAMTE-FPR-1\n";
}

inline void save_fingerprints(const std::filesystem::path& path,
                              const std::vector<CameraFingerprint>& fps,
                              const ResidualConfig& cfg) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot write fingerprints: " + path.string());
  nlohmann::json h;
  h["extractor"] = cfg.to_json();
  auto& list = h["fingerprints"] = nlohmann::json::array();
  for (const auto& fp : fps)
    list.push_back({{"camera", fp.camera},
                    {"count", fp.count},
                    {"shape", {fp.residual.c, fp.residual.h, fp.residual.w}}});
  std::string hs = h.dump();
  uint64_t len = hs.size();
  f.write(fpr::kMagic, sizeof(fpr::kMagic) - 1);
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(hs.data(), std::streamsize(hs.size()));
  for (const auto& fp : fps)
    f.write(reinterpret_cast<const char*>(fp.residual.data.data()),
            std::streamsize(fp.residual.size() * sizeof(double)));
  if (!f) throw MissingInputError("fingerprint write failed: " + path.string());
}

inline std::vector<CameraFingerprint> load_fingerprints(const std::filesystem::path& path,
                                                        ResidualConfig* cfg = nullptr) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot open fingerprints: " + path.string());
  char magic[sizeof(fpr::kMagic) - 1];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, fpr::kMagic, sizeof(magic)) != 0)
    throw MissingInputError("not a SIAMTE-FPR-1 file: " + path.string());
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string hs(len, '\0');
  f.read(hs.data(), std::streamsize(len));
  nlohmann::json h = nlohmann::json::parse(hs);
  if (cfg) *cfg = ResidualConfig::from_json(h.at("extractor"));
  std::vector<CameraFingerprint> fps;
  for (const auto& e : h.at("fingerprints")) {
    CameraFingerprint fp;
    fp.camera = e.at("camera").get<std::string>();
    fp.count = e.at("count").get<int>();
    auto shape = e.at("shape");
    fp.residual = Tensor(shape[0].get<int>(), shape[1].get<int>(), shape[2].get<int>());
    f.read(reinterpret_cast<char*>(fp.residual.data.data()),
           std::streamsize(fp.residual.size() * sizeof(double)));
    fps.push_back(std::move(fp));
  }
  if (!f) throw MissingInputError("truncated fingerprint file: " + path.string());
  return fps;
}

}  // namespace siamte
