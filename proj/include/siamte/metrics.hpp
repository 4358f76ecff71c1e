#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "siamte/errors.hpp"
#include "siamte/tensor.hpp"

namespace siamte {

/// Mean elementwise absolute difference, in 8-bit units.
inline double l1_distance(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ConfigError("l1_distance: shape mismatch");
  if (a.size() == 0) throw ConfigError("l1_distance: empty image");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
  return s / double(a.size());
}

// ---------------------------------------------------------------------------
// NIQE: distance between an image's natural-scene statistics and a model
// fitted on pristine images. Features are generalized-Gaussian fits of MSCN
// coefficients plus asymmetric fits of four orientations of neighboring
// products, at two scales: 18 per scale, 36 total.
// ---------------------------------------------------------------------------

struct NiqeModel {
  int patch = 48;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return int(mean.size()); }
};

namespace niqe_detail {

constexpr int kFeaturesPerScale = 18;
constexpr int kScales = 2;
constexpr double kMscnC = 1.0;

/// Separable 7x7 Gaussian, sigma 7/6, replicate padding, kernel sum 1.
inline Tensor gauss7(const Tensor& x) {
  static const std::vector<double> k = [] {
    std::vector<double> v(7);
    double s = 0, sigma = 7.0 / 6.0;
    for (int i = 0; i < 7; ++i) {
      v[i] = std::exp(-0.5 * (i - 3) * (i - 3) / (sigma * sigma));
      s += v[i];
    }
    for (auto& e : v) e /= s;
    return v;
  }();
  int h = x.h, w = x.w;
  Tensor tmp(1, h, w), out(1, h, w);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      double s = 0;
      for (int t = -3; t <= 3; ++t) s += k[t + 3] * x.at(0, y, std::clamp(xx + t, 0, w - 1));
      tmp.at(0, y, xx) = s;
    }
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      double s = 0;
      for (int t = -3; t <= 3; ++t) s += k[t + 3] * tmp.at(0, std::clamp(y + t, 0, h - 1), xx);
      out.at(0, y, xx) = s;
    }
  return out;
}

struct MscnField {
  Tensor mscn;
  Tensor sigma;
};

inline MscnField mscn_field(const Tensor& gray) {
  Tensor mu = gauss7(gray);
  Tensor sq(1, gray.h, gray.w);
  for (size_t i = 0; i < sq.size(); ++i) sq.data[i] = gray.data[i] * gray.data[i];
  Tensor musq = gauss7(sq);
  MscnField f{Tensor(1, gray.h, gray.w), Tensor(1, gray.h, gray.w)};
  for (size_t i = 0; i < f.mscn.size(); ++i) {
    double var = std::max(0.0, musq.data[i] - mu.data[i] * mu.data[i]);
    f.sigma.data[i] = std::sqrt(var);
    f.mscn.data[i] = (gray.data[i] - mu.data[i]) / (f.sigma.data[i] + kMscnC);
  }
  return f;
}

/// Ratio Gamma(2/g)^2 / (Gamma(1/g) Gamma(3/g)) tabulated over a shape grid;
/// shared by the symmetric and asymmetric moment-matching fits.
inline double shape_lookup(double rhat) {
  struct Table {
    std::vector<double> gamma, rho;
  };
  static const Table tab = [] {
    Table t;
    for (double g = 0.2; g <= 10.0 + 1e-12; g += 0.001) {
      t.gamma.push_back(g);
      double num = std::tgamma(2.0 / g);
      t.rho.push_back(num * num / (std::tgamma(1.0 / g) * std::tgamma(3.0 / g)));
    }
    return t;
  }();
  size_t best = 0;
  double bd = std::abs(tab.rho[0] - rhat);
  for (size_t i = 1; i < tab.gamma.size(); ++i) {
    double d = std::abs(tab.rho[i] - rhat);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return tab.gamma[best];
}

/// Symmetric generalized-Gaussian fit: (shape, mean square).
inline void ggd_fit(const std::vector<double>& x, double* alpha, double* sigma_sq) {
  double m_abs = 0, m_sq = 0;
  for (double v : x) {
    m_abs += std::abs(v);
    m_sq += v * v;
  }
  m_abs /= double(x.size());
  m_sq /= double(x.size());
  if (!(m_sq > 0)) throw NumericError("zero-variance MSCN");
  *alpha = shape_lookup(m_abs * m_abs / m_sq);
  *sigma_sq = m_sq;
}

/// Asymmetric fit of a product field: (shape, mean, left/right variances).
inline void aggd_fit(const std::vector<double>& x, double* alpha, double* eta, double* sl_sq,
                     double* sr_sq) {
  double nl = 0, nr = 0, sl = 0, sr = 0, m_abs = 0, m_sq = 0;
  for (double v : x) {
    if (v < 0) {
      sl += v * v;
      ++nl;
    } else if (v > 0) {
      sr += v * v;
      ++nr;
    }
    m_abs += std::abs(v);
    m_sq += v * v;
  }
  m_abs /= double(x.size());
  m_sq /= double(x.size());
  if (!(m_sq > 0)) throw NumericError("zero-variance MSCN");
  double sigma_l = nl > 0 ? std::sqrt(sl / nl) : 0.0;
  double sigma_r = nr > 0 ? std::sqrt(sr / nr) : 0.0;
  double gh = sigma_r > 0 ? sigma_l / sigma_r : 0.0;
  double rhat = m_abs * m_abs / m_sq;
  double rnorm = rhat * (gh * gh * gh + 1.0) * (gh + 1.0) /
                 ((gh * gh + 1.0) * (gh * gh + 1.0));
  double a = shape_lookup(rnorm);
  *alpha = a;
  *sl_sq = sigma_l * sigma_l;
  *sr_sq = sigma_r * sigma_r;
  double c = std::sqrt(std::tgamma(1.0 / a) / std::tgamma(3.0 / a));
  *eta = (sigma_r - sigma_l) * (std::tgamma(2.0 / a) / std::tgamma(1.0 / a)) * c;
}

/// 18 features of one patch of an MSCN map: GGD of the coefficients plus
/// AGGD of the products with circularly shifted neighbors (H, V, D1, D2).
inline void patch_features(const Tensor& mscn, int y0, int x0, int p, double* out) {
  std::vector<double> vals;
  vals.reserve(size_t(p) * p);
  for (int y = 0; y < p; ++y)
    for (int x = 0; x < p; ++x) vals.push_back(mscn.at(0, y0 + y, x0 + x));
  ggd_fit(vals, &out[0], &out[1]);

  const int shifts[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
  int h = mscn.h, w = mscn.w;
  for (int o = 0; o < 4; ++o) {
    std::vector<double> prod;
    prod.reserve(size_t(p) * p);
    for (int y = 0; y < p; ++y)
      for (int x = 0; x < p; ++x) {
        int yy = y0 + y, xx = x0 + x;
        int ys = (yy + shifts[o][0]) % h;
        int xs = (xx + shifts[o][1] + w) % w;
        prod.push_back(mscn.at(0, yy, xx) * mscn.at(0, ys, xs));
      }
    aggd_fit(prod, &out[2 + 4 * o], &out[3 + 4 * o], &out[4 + 4 * o], &out[5 + 4 * o]);
  }
}

/// 2x2 box downsample (dims must be even).
inline Tensor half(const Tensor& x) {
  Tensor out(1, x.h / 2, x.w / 2);
  for (int y = 0; y < out.h; ++y)
    for (int xx = 0; xx < out.w; ++xx)
      out.at(0, y, xx) = 0.25 * (x.at(0, 2 * y, 2 * xx) + x.at(0, 2 * y, 2 * xx + 1) +
                                 x.at(0, 2 * y + 1, 2 * xx) + x.at(0, 2 * y + 1, 2 * xx + 1));
  return out;
}

struct ImageFeatures {
  std::vector<Eigen::VectorXd> per_patch;
  std::vector<double> sharpness;
};

/// 36-feature vectors for every non-overlapping patch of the image, plus the
/// scale-1 sharpness (mean local sigma) of each patch.
inline ImageFeatures image_features(const Tensor& image, int patch) {
  if (patch < 8 || patch % 2) throw ConfigError("NIQE patch size must be even and >= 8");
  Tensor gray = image.luminance();
  if (gray.h < 2 * patch || gray.w < 2 * patch)
    throw ConfigError("image too small for NIQE (needs 2 patches per side): " + image.shape_str());
  int by = gray.h / patch, bx = gray.w / patch;
  gray = gray.crop(0, 0, by * patch, bx * patch);

  MscnField f1 = mscn_field(gray);
  MscnField f2 = mscn_field(half(gray));

  ImageFeatures out;
  for (int y = 0; y < by; ++y)
    for (int x = 0; x < bx; ++x) {
      Eigen::VectorXd feat(2 * kFeaturesPerScale);
      try {
        patch_features(f1.mscn, y * patch, x * patch, patch, feat.data());
        patch_features(f2.mscn, y * patch / 2, x * patch / 2, patch / 2,
                       feat.data() + kFeaturesPerScale);
      } catch (const NumericError&) {
        continue;  // fully flat patch; usable ones remain unless the image is constant
      }
      out.per_patch.push_back(std::move(feat));
      double s = 0;
      for (int yy = 0; yy < patch; ++yy)
        for (int xx = 0; xx < patch; ++xx) s += f1.sigma.at(0, y * patch + yy, x * patch + xx);
      out.sharpness.push_back(s / double(patch) * (1.0 / patch));
    }
  if (out.per_patch.empty()) throw NumericError("zero-variance MSCN");
  return out;
}

inline Eigen::MatrixXd sample_cov(const std::vector<Eigen::VectorXd>& xs,
                                  const Eigen::VectorXd& mean) {
  int d = int(mean.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : xs) {
    Eigen::VectorXd c = x - mean;
    cov += c * c.transpose();
  }
  if (xs.size() > 1) cov /= double(xs.size() - 1);
  return cov;
}

}  // namespace niqe_detail

/// Fit the pristine model: features of sharp patches (local sigma >= 0.75 of
/// each image's peak), pooled over the corpus.
inline NiqeModel fit_niqe_model(const std::vector<Tensor>& images, int patch = 48,
                                int min_images = 50, double sharp_frac = 0.75) {
  if (int(images.size()) < min_images)
    throw ConfigError("pristine corpus too small: " + std::to_string(images.size()) + " < " +
                      std::to_string(min_images));
  std::vector<Eigen::VectorXd> pool;
  for (const auto& img : images) {
    auto feats = niqe_detail::image_features(img, patch);
    double peak = *std::max_element(feats.sharpness.begin(), feats.sharpness.end());
    for (size_t i = 0; i < feats.per_patch.size(); ++i)
      if (feats.sharpness[i] >= sharp_frac * peak) pool.push_back(std::move(feats.per_patch[i]));
  }
  NiqeModel m;
  m.patch = patch;
  m.mean = Eigen::VectorXd::Zero(2 * niqe_detail::kFeaturesPerScale);
  for (const auto& x : pool) m.mean += x;
  m.mean /= double(pool.size());
  m.cov = niqe_detail::sample_cov(pool, m.mean);
  return m;
}

/// Mahalanobis-type distance between the image's patch statistics and the
/// pristine model, under the averaged covariance (pseudo-inverted).
inline double niqe(const Tensor& image, const NiqeModel& model) {
  auto feats = niqe_detail::image_features(image, model.patch);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.dim());
  for (const auto& x : feats.per_patch) mean += x;
  mean /= double(feats.per_patch.size());
  Eigen::MatrixXd cov = niqe_detail::sample_cov(feats.per_patch, mean);

  Eigen::MatrixXd avg = 0.5 * (model.cov + cov);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(avg);
  const auto& ev = es.eigenvalues();
  double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  Eigen::VectorXd inv = ev.unaryExpr([&](double v) { return v > tol ? 1.0 / v : 0.0; });
  Eigen::VectorXd d = model.mean - mean;
  Eigen::VectorXd t = es.eigenvectors().transpose() * d;
  double q = (t.array().square() * inv.array()).sum();
  return std::sqrt(std::max(0.0, q));
}

namespace niqe_io {
constexpr char kMagic[] = "SIAMTE-NIQE-1\n";
}

inline void save_niqe_model(const std::filesystem::path& path, const NiqeModel& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot write NIQE model: " + path.string());
  nlohmann::json h = {{"patch", m.patch}, {"dim", m.dim()}};
  std::string hs = h.dump();
  uint64_t len = hs.size();
  f.write(niqe_io::kMagic, sizeof(niqe_io::kMagic) - 1);
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(hs.data(), std::streamsize(hs.size()));
  f.write(reinterpret_cast<const char*>(m.mean.data()), std::streamsize(m.dim() * sizeof(double)));
  f.write(reinterpret_cast<const char*>(m.cov.data()),
          std::streamsize(size_t(m.dim()) * m.dim() * sizeof(double)));
  if (!f) throw MissingInputError("NIQE model write failed: " + path.string());
}

inline NiqeModel load_niqe_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot open NIQE model: " + path.string());
  char magic[sizeof(niqe_io::kMagic) - 1];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, niqe_io::kMagic, sizeof(magic)) != 0)
    throw MissingInputError("not a SIAMTE-NIQE-1 file: " + path.string());
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string hs(len, '\0');
  f.read(hs.data(), std::streamsize(len));
  nlohmann::json h = nlohmann::json::parse(hs);
  NiqeModel m;
  m.patch = h.at("patch").get<int>();
  int d = h.at("dim").get<int>();
  m.mean.resize(d);
  m.cov.resize(d, d);
  f.read(reinterpret_cast<char*>(m.mean.data()), std::streamsize(d * sizeof(double)));
  f.read(reinterpret_cast<char*>(m.cov.data()), std::streamsize(size_t(d) * d * sizeof(double)));
  if (!f) throw MissingInputError("truncated NIQE model: " + path.string());
  return m;
}

}  // namespace siamte
