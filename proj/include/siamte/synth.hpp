#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siamte/errors.hpp"
#include "siamte/image_io.hpp"
#include "siamte/rng.hpp"
#include "siamte/tensor.hpp"

namespace siamte {

/// One simulated device type. Identity comes from a fixed multiplicative
/// sensor pattern plus the read-noise level, tone curve, and in-camera JPEG
/// quality; scene content is drawn from the same distribution for everyone.
struct CameraProfile {
  std::string name;
  double prnu_amplitude = 0.035;
  double noise_sigma = 1.0;
  double gamma = 1.0;
  int jpeg_quality = 90;
  uint64_t prnu_seed = 0;
};

inline std::vector<CameraProfile> default_profiles(int cameras, uint64_t seed) {
  if (cameras < 2 || cameras > 26) throw ConfigError("camera count must be in [2, 26]");
  static const double gammas[4] = {1.0, 0.985, 1.03, 1.015};
  std::vector<CameraProfile> out;
  uint64_t base = Rng::derive(seed, 0x50524e55u);
  for (int ci = 0; ci < cameras; ++ci) {
    CameraProfile p;
    p.name = std::string("cam_") + char('a' + ci);
    p.noise_sigma = 0.7 * (ci + 1);
    p.gamma = gammas[ci % 4];
    p.jpeg_quality = std::max(40, 95 - 7 * ci);
    p.prnu_seed = Rng::derive(base, uint64_t(ci) + 1);
    out.push_back(std::move(p));
  }
  return out;
}

inline Tensor prnu_field(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Tensor k(1, h, w);
  for (double& v : k.data) v = rng.normal();
  return k;
}

namespace detail {

/// Smooth value noise: random grid nodes, bilinear interpolation.
inline void add_value_noise(Tensor& field, Rng& rng, int gh, int gw, double amp) {
  std::vector<double> grid(size_t(gh + 1) * (gw + 1));
  for (double& v : grid) v = rng.uniform(-1.0, 1.0);
  for (int y = 0; y < field.h; ++y) {
    double fy = field.h > 1 ? double(y) * gh / (field.h - 1) : 0.0;
    int y0 = std::min(int(fy), gh - 1);
    double ty = fy - y0;
    for (int x = 0; x < field.w; ++x) {
      double fx = field.w > 1 ? double(x) * gw / (field.w - 1) : 0.0;
      int x0 = std::min(int(fx), gw - 1);
      double tx = fx - x0;
      auto g = [&](int yy, int xx) { return grid[size_t(yy) * (gw + 1) + xx]; };
      double v = (1 - ty) * ((1 - tx) * g(y0, x0) + tx * g(y0, x0 + 1)) +
                 ty * ((1 - tx) * g(y0 + 1, x0) + tx * g(y0 + 1, x0 + 1));
      field.at(0, y, x) += amp * v;
    }
  }
}

}  // namespace detail

/// Camera-agnostic scene: multi-octave smooth fields plus a few soft blobs,
/// stretched to full range, with gentle per-channel color variation.
inline Tensor render_scene(int h, int w, uint64_t seed) {
  if (h < 8 || w < 8) throw ConfigError("scene too small");
  Rng rng(seed);
  Tensor lum = Tensor::zeros(1, h, w);
  double amp = 1.0;
  for (int oct = 0; oct < 4; ++oct) {
    detail::add_value_noise(lum, rng, 3 << oct, 4 << oct, amp);
    amp *= 0.55;
  }
  int blobs = 2 + rng.uniform_int(5);
  for (int b = 0; b < blobs; ++b) {
    double cy = rng.uniform(0.0, h - 1.0), cx = rng.uniform(0.0, w - 1.0);
    double r = rng.uniform(4.0, std::min(h, w) / 4.0);
    double a = rng.uniform(-0.8, 0.8);
    double inv = 1.0 / (2.0 * (r / 2.0) * (r / 2.0));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        if (d2 < 9.0 * r * r) lum.at(0, y, x) += a * std::exp(-d2 * inv);
      }
  }
  double lo = lum.min(), hi = lum.max();
  double span = hi - lo > 0 ? hi - lo : 1.0;
  for (double& v : lum.data) v = 8.0 + 239.0 * (v - lo) / span;

  Tensor img(3, h, w);
  for (int ci = 0; ci < 3; ++ci) {
    Tensor tint = Tensor::zeros(1, h, w);
    detail::add_value_noise(tint, rng, 3, 4, rng.uniform(0.0, 12.0));
    double offset = rng.uniform(-18.0, 18.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.at(ci, y, x) = std::clamp(lum.at(0, y, x) + offset + tint.at(0, y, x), 4.0, 251.0);
  }
  return img;
}

/// Applies the device chain: tone curve, multiplicative sensor pattern,
/// read noise, then the in-camera JPEG round trip.
inline Tensor simulate_camera(const Tensor& scene, const CameraProfile& profile,
                              const Tensor& prnu, uint64_t noise_seed) {
  if (scene.c != 3) throw ConfigError("scene must have 3 channels");
  if (prnu.c != 1 || prnu.h != scene.h || prnu.w != scene.w)
    throw ConfigError("sensor pattern shape does not match the scene");
  Rng rng(noise_seed);
  Tensor out = scene;
  for (int ci = 0; ci < 3; ++ci)
    for (int y = 0; y < scene.h; ++y)
      for (int x = 0; x < scene.w; ++x) {
        double v = 255.0 * std::pow(out.at(ci, y, x) / 255.0, profile.gamma);
        v *= 1.0 + profile.prnu_amplitude * prnu.at(0, y, x);
        // Poisson-Gaussian: shot noise grows with the signal, read noise is the floor
        v += profile.noise_sigma * std::sqrt(0.5 + v / 255.0) * rng.normal();
        out.at(ci, y, x) = std::clamp(v, 0.0, 255.0);
      }
  std::vector<unsigned char> jpg = encode_jpeg(quantize_u8(out), profile.jpeg_quality);
  return decode_jpeg(jpg);
}

struct SynthConfig {
  int cameras = 4;
  int images_per_camera = 100;
  int height = 160;
  int width = 224;
  double train_frac = 0.70;
  double val_frac = 0.15;
  uint64_t seed = 0;

  void validate() const {
    if (cameras < 2 || cameras > 26) throw ConfigError("synth.cameras must be in [2, 26]");
    if (images_per_camera < 3) throw ConfigError("synth.images_per_camera must be >= 3");
    if (height < 32 || width < 32) throw ConfigError("synth images must be >= 32x32");
    if (!(train_frac > 0) || !(val_frac > 0) || train_frac + val_frac >= 1.0)
      throw ConfigError("synth split fractions must be positive and sum below 1");
  }

  nlohmann::json to_json() const {
    return {{"cameras", cameras},     {"images_per_camera", images_per_camera},
            {"height", height},       {"width", width},
            {"train_frac", train_frac}, {"val_frac", val_frac},
            {"seed", seed}};
  }
  static SynthConfig from_json(const nlohmann::json& j) {
    SynthConfig c;
    if (j.contains("cameras")) c.cameras = j.at("cameras").get<int>();
    if (j.contains("images_per_camera")) c.images_per_camera = j.at("images_per_camera").get<int>();
    if (j.contains("height")) c.height = j.at("height").get<int>();
    if (j.contains("width")) c.width = j.at("width").get<int>();
    if (j.contains("train_frac")) c.train_frac = j.at("train_frac").get<double>();
    if (j.contains("val_frac")) c.val_frac = j.at("val_frac").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    c.validate();
    return c;
  }
};

struct SynthSummary {
  int files_written = 0;
  int train_per_camera = 0;
  int val_per_camera = 0;
  int test_per_camera = 0;
};

/// Renders the corpus under <root>/<split>/<camera>/img_NNNN.png. Fully
/// deterministic for a given config, so re-running is byte-identical.
inline SynthSummary synth_corpus(const std::filesystem::path& root, const SynthConfig& cfg) {
  cfg.validate();
  int n = cfg.images_per_camera;
  int n_train = std::max(1, int(std::lround(cfg.train_frac * n)));
  int n_val = std::max(1, int(std::lround(cfg.val_frac * n)));
  if (n_train + n_val >= n) throw ConfigError("synth splits leave no test images");

  std::vector<CameraProfile> profiles = default_profiles(cfg.cameras, cfg.seed);
  uint64_t scene_base = Rng::derive(cfg.seed, 0x5343454eu);
  uint64_t noise_base = Rng::derive(cfg.seed, 0x4e4f4953u);

  SynthSummary sum;
  sum.train_per_camera = n_train;
  sum.val_per_camera = n_val;
  sum.test_per_camera = n - n_train - n_val;
  for (int ci = 0; ci < cfg.cameras; ++ci) {
    const CameraProfile& p = profiles[ci];
    Tensor k = prnu_field(cfg.height, cfg.width, p.prnu_seed);
    for (int idx = 0; idx < n; ++idx) {
      const char* split = idx < n_train ? "train" : (idx < n_train + n_val ? "val" : "test");
      uint64_t stream = uint64_t(ci) * 1000003u + idx;
      Tensor scene = render_scene(cfg.height, cfg.width, Rng::derive(scene_base, stream));
      Tensor shot = simulate_camera(scene, p, k, Rng::derive(noise_base, stream));
      char name[32];
      std::snprintf(name, sizeof(name), "img_%04d.png", idx);
      std::filesystem::path dir = root / split / p.name;
      std::filesystem::create_directories(dir);
      save_png((dir / name).string(), shot);
      ++sum.files_written;
    }
  }
  return sum;
}

}  // namespace siamte
