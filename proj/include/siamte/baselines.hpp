#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "siamte/errors.hpp"
#include "siamte/image_io.hpp"
#include "siamte/models.hpp"
#include "siamte/tensor.hpp"

namespace siamte {

/// Per-channel k x k median with edge replication.
inline Tensor median_filter(const Tensor& image, int k) {
  if (k < 3 || k % 2 == 0) throw ConfigError("median kernel must be odd and >= 3");
  int r = k / 2;
  Tensor out(image.c, image.h, image.w);
  std::vector<double> win;
  win.reserve(size_t(k) * k);
  for (int ci = 0; ci < image.c; ++ci)
    for (int y = 0; y < image.h; ++y)
      for (int x = 0; x < image.w; ++x) {
        win.clear();
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx)
            win.push_back(image.at(ci, std::clamp(y + dy, 0, image.h - 1),
                                   std::clamp(x + dx, 0, image.w - 1)));
        auto mid = win.begin() + win.size() / 2;
        std::nth_element(win.begin(), mid, win.end());
        out.at(ci, y, x) = *mid;
      }
  return out;
}

/// Separable Gaussian blur, kernel normalized to sum 1, edge replication.
/// Default sigma spans the kernel at +-3 sigma.
inline Tensor gaussian_filter(const Tensor& image, int k, double sigma = 0.0) {
  if (k < 3 || k % 2 == 0) throw ConfigError("gaussian kernel must be odd and >= 3");
  if (sigma == 0.0) sigma = k / 6.0;
  if (!(sigma > 0)) throw ConfigError("gaussian sigma must be > 0");
  int r = k / 2;
  std::vector<double> kern(k);
  double s = 0;
  for (int i = 0; i < k; ++i) {
    kern[i] = std::exp(-0.5 * (i - r) * (i - r) / (sigma * sigma));
    s += kern[i];
  }
  for (auto& v : kern) v /= s;

  Tensor tmp(image.c, image.h, image.w), out(image.c, image.h, image.w);
  for (int ci = 0; ci < image.c; ++ci)
    for (int y = 0; y < image.h; ++y)
      for (int x = 0; x < image.w; ++x) {
        double acc = 0;
        for (int t = -r; t <= r; ++t)
          acc += kern[t + r] * image.at(ci, y, std::clamp(x + t, 0, image.w - 1));
        tmp.at(ci, y, x) = acc;
      }
  for (int ci = 0; ci < image.c; ++ci)
    for (int y = 0; y < image.h; ++y)
      for (int x = 0; x < image.w; ++x) {
        double acc = 0;
        for (int t = -r; t <= r; ++t)
          acc += kern[t + r] * tmp.at(ci, std::clamp(y + t, 0, image.h - 1), x);
        out.at(ci, y, x) = acc;
      }
  return out;
}

/// Encode-decode round trip through the pinned baseline JPEG codec.
inline Tensor jpeg_compress(const Tensor& image, int quality) {
  if (quality < 1 || quality > 100) throw ConfigError("JPEG quality must be in [1,100]");
  std::vector<unsigned char> bytes = encode_jpeg(quantize_u8(image), quality);
  return decode_jpeg(bytes);
}

/// Gradient-sign dithering against the true label:
/// out = clip(image + eps * sign(d CE / d image), 0, 255), sign(0) = 0.
inline Tensor adversarial_dither(const Tensor& image, const ClassifierNet& classifier,
                                 const std::string& true_label, double eps) {
  if (!(eps > 0)) throw ConfigError("dither scale must be > 0");
  int lbl = classifier.label_index(true_label);
  nn::Tape tape;
  Tensor logits_t = classifier.forward_logits(image, tape);
  Eigen::VectorXd logits =
      Eigen::Map<const Eigen::VectorXd>(logits_t.data.data(), logits_t.size());
  Eigen::VectorXd gl;
  cross_entropy(logits, lbl, &gl);
  Tensor glt(logits_t.c, logits_t.h, logits_t.w);
  Eigen::Map<Eigen::VectorXd>(glt.data.data(), glt.size()) = gl;
  Tensor grad = classifier.backward_logits(glt, tape, /*param_grads=*/false);

  Tensor out = image;
  for (size_t i = 0; i < out.size(); ++i) {
    double g = grad.data[i];
    double step = g > 0 ? eps : (g < 0 ? -eps : 0.0);
    out.data[i] = std::clamp(out.data[i] + step, 0.0, 255.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CLI-addressable transform labels: mf3 mf5 gf3 gf5 cp30 cp40 cp50 ad1 ad2
// siamte (plus any mfK/gfK/cpQ/adE within the parameter bounds).
// ---------------------------------------------------------------------------

struct TransformSpec {
  enum class Kind { identity, median, gaussian, jpeg, adversarial, siamte };
  Kind kind = Kind::identity;
  double param = 0.0;
  std::string label = "ori";
};

inline TransformSpec parse_transform(const std::string& label) {
  TransformSpec t;
  t.label = label;
  auto tail = [&](size_t n) {
    try {
      size_t used = 0;
      double v = std::stod(label.substr(n), &used);
      if (used != label.size() - n) throw std::invalid_argument(label);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad transform parameter in label: " + label);
    }
  };
  if (label == "ori" || label == "identity") {
    t.kind = TransformSpec::Kind::identity;
  } else if (label == "siamte") {
    t.kind = TransformSpec::Kind::siamte;
  } else if (label.rfind("mf", 0) == 0) {
    t.kind = TransformSpec::Kind::median;
    t.param = tail(2);
    if (t.param < 3 || int(t.param) % 2 == 0 || t.param != int(t.param))
      throw ConfigError("median kernel must be odd and >= 3: " + label);
  } else if (label.rfind("gf", 0) == 0) {
    t.kind = TransformSpec::Kind::gaussian;
    t.param = tail(2);
    if (t.param < 3 || int(t.param) % 2 == 0 || t.param != int(t.param))
      throw ConfigError("gaussian kernel must be odd and >= 3: " + label);
  } else if (label.rfind("cp", 0) == 0) {
    t.kind = TransformSpec::Kind::jpeg;
    t.param = tail(2);
    if (t.param < 1 || t.param > 100) throw ConfigError("JPEG quality out of [1,100]: " + label);
  } else if (label.rfind("ad", 0) == 0) {
    t.kind = TransformSpec::Kind::adversarial;
    t.param = tail(2);
    if (!(t.param > 0)) throw ConfigError("dither scale must be > 0: " + label);
  } else {
    throw ConfigError("unknown transform label: " + label);
  }
  return t;
}

/// Models needed by the model-backed transforms; optional for the rest.
struct TransformContext {
  const ClassifierNet* classifier = nullptr;
  const EraserNet* eraser = nullptr;
  std::string true_label;
};

inline Tensor apply_transform(const TransformSpec& spec, const Tensor& image,
                              const TransformContext& ctx = {}) {
  using Kind = TransformSpec::Kind;
  switch (spec.kind) {
    case Kind::identity:
      return image;
    case Kind::median:
      return median_filter(image, int(spec.param));
    case Kind::gaussian:
      return gaussian_filter(image, int(spec.param));
    case Kind::jpeg:
      return jpeg_compress(image, int(spec.param));
    case Kind::adversarial:
      if (!ctx.classifier) throw ConfigError("adversarial dithering needs a classifier");
      if (ctx.true_label.empty()) throw ConfigError("adversarial dithering needs the true label");
      return adversarial_dither(image, *ctx.classifier, ctx.true_label, spec.param);
    case Kind::siamte: {
      if (!ctx.eraser) throw ConfigError("siamte transform needs an eraser checkpoint");
      Tensor out = (*ctx.eraser)(image);
      return out.clamp_(0.0, 255.0);
    }
  }
  throw ConfigError("unhandled transform kind");
}

}  // namespace siamte
