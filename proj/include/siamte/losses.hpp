#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "siamte/dataset.hpp"
#include "siamte/errors.hpp"
#include "siamte/models.hpp"
#include "siamte/tensor.hpp"

namespace siamte {

struct LossConfig {
  double lambda_es = 3.0;
  double lambda_tf = 1000.0;
  double lambda_ci = 1.0;
  double margin = 0.5;
  double threshold = 3.0;

  nlohmann::json to_json() const {
    return {{"lambda_es", lambda_es},
            {"lambda_tf", lambda_tf},
            {"lambda_ci", lambda_ci},
            {"margin", margin},
            {"threshold", threshold}};
  }
  static LossConfig from_json(const nlohmann::json& j) {
    LossConfig c;
    c.lambda_es = j.value("lambda_es", c.lambda_es);
    c.lambda_tf = j.value("lambda_tf", c.lambda_tf);
    c.lambda_ci = j.value("lambda_ci", c.lambda_ci);
    c.margin = j.value("margin", c.margin);
    c.threshold = j.value("threshold", c.threshold);
    return c;
  }
};

struct LossBreakdown {
  double l_es = 0.0;
  double l_tf = 0.0;
  double l_ci = 0.0;

  double hybrid(const LossConfig& cfg) const {
    return cfg.lambda_es * l_es + cfg.lambda_tf * l_tf + cfg.lambda_ci * l_ci;
  }
};

/// Rotate a sequence left by k places: out[g] = in[(g + k) mod n].
/// k may be any integer, including negative; empty input is an error.
template <class T>
std::vector<T> cyclic_shift(const std::vector<T>& in, long long k) {
  if (in.empty()) throw ConfigError("cyclic_shift of empty sequence");
  long long n = (long long)in.size();
  long long r = ((k % n) + n) % n;
  std::vector<T> out;
  out.reserve(in.size());
  for (long long g = 0; g < n; ++g) out.push_back(in[size_t((g + r) % n)]);
  return out;
}

// ---------------------------------------------------------------------------
// Truncated fidelity: per element, |im - sig| counts only where it exceeds
// the threshold; the loss is the mean over every element. At |d| == T the
// element is truncated to zero, and its (sub)gradient is zero.
// ---------------------------------------------------------------------------
inline double truncated_fidelity(const Tensor& im, const Tensor& sig, double threshold,
                                 Tensor* grad_sig = nullptr) {
  if (!im.same_shape(sig)) throw ConfigError("truncated_fidelity: shape mismatch");
  if (threshold < 0) throw ConfigError("truncated_fidelity: threshold must be >= 0");
  size_t n = im.size();
  if (n == 0) throw ConfigError("truncated_fidelity: empty image");
  if (grad_sig) *grad_sig = Tensor::zeros(sig.c, sig.h, sig.w);
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = im.data[i] - sig.data[i];
    double a = std::abs(d);
    if (a > threshold) {
      acc += a;
      if (grad_sig) grad_sig->data[i] = (d > 0) ? -1.0 / double(n) : 1.0 / double(n);
    }
  }
  return acc / double(n);
}

// ---------------------------------------------------------------------------
// Embedded similarity on a group of raw (pre-normalization) feature vectors.
// Each vector is L2-normalized, then every cyclic shift k = 1..G-1 contributes
// the mean hinge max(0, ||f_g - f_{g+k}|| - margin); the result is the mean
// over shifts. Optional gradients are with respect to the raw features.
// ---------------------------------------------------------------------------
inline double embedded_similarity_features(const std::vector<Eigen::VectorXd>& raw, double margin,
                                           std::vector<Eigen::VectorXd>* grads = nullptr) {
  size_t G = raw.size();
  if (G < 2) throw ConfigError("group too small for pairwise loss");
  std::vector<Eigen::VectorXd> f(G);
  std::vector<double> norm(G);
  for (size_t g = 0; g < G; ++g) {
    norm[g] = raw[g].norm();
    if (!(norm[g] > 0)) throw NumericError("zero-norm embedding");
    f[g] = raw[g] / norm[g];
  }
  std::vector<Eigen::VectorXd> gf;
  if (grads) gf.assign(G, Eigen::VectorXd::Zero(raw[0].size()));

  double loss = 0.0;
  double pair_w = 1.0 / (double(G) * double(G - 1));
  for (size_t k = 1; k < G; ++k) {
    for (size_t g = 0; g < G; ++g) {
      size_t s = (g + k) % G;
      double d = (f[g] - f[s]).norm();
      double h = d - margin;
      if (h > 0) {
        loss += pair_w * h;
        if (grads && d > 0) {
          Eigen::VectorXd u = (f[g] - f[s]) * (pair_w / d);
          gf[g] += u;
          gf[s] -= u;
        }
      }
    }
  }
  if (grads) {
    grads->assign(G, Eigen::VectorXd());
    for (size_t g = 0; g < G; ++g) (*grads)[g] = (gf[g] - f[g] * f[g].dot(gf[g])) / norm[g];
  }
  return loss;
}

/// Embedded similarity over erased signals, with a caller-supplied embedder.
/// EmbedFn: Tensor -> Eigen::VectorXd of raw features.
template <class EmbedFn>
double embedded_similarity(const std::vector<Tensor>& signals, double margin, EmbedFn&& embed_fn) {
  std::vector<Eigen::VectorXd> raw;
  raw.reserve(signals.size());
  for (const auto& s : signals) raw.push_back(embed_fn(s));
  return embedded_similarity_features(raw, margin);
}

// ---------------------------------------------------------------------------
// Cross identity: swap each image's trace onto every other group member's
// signal (via cyclic shifts of the trace and label lists) and score the
// classifier's recognition of the transplanted identity with cross-entropy.
// ClassifyFn: Tensor -> Eigen::VectorXd of logits.
// ---------------------------------------------------------------------------
template <class ClassifyFn>
double cross_identity(const std::vector<Tensor>& signals, const std::vector<Tensor>& traces,
                      const std::vector<int>& labels, ClassifyFn&& classify_fn) {
  size_t G = signals.size();
  if (G < 2) throw ConfigError("group too small for pairwise loss");
  if (traces.size() != G || labels.size() != G)
    throw ConfigError("cross identity: mismatched group lists");
  double loss = 0.0;
  for (size_t k = 1; k < G; ++k) {
    double shift_loss = 0.0;
    for (size_t g = 0; g < G; ++g) {
      size_t s = (g + k) % G;
      Tensor synth = signals[g];
      synth += traces[s];
      Eigen::VectorXd logits = classify_fn(synth);
      shift_loss += cross_entropy(logits, labels[s]);
    }
    loss += shift_loss / double(G);
  }
  return loss / double(G - 1);
}

// ---------------------------------------------------------------------------
// Full hybrid loss on one group. The value path reuses the generic pieces;
// the gradient path runs true reverse passes and accumulates parameter
// gradients into the eraser only. The oracle network stays frozen: gradients
// flow through its layers to the synthesized inputs, never into its weights.
// ---------------------------------------------------------------------------

inline std::vector<int> group_label_indices(const ImageGroup& group,
                                            const ClassifierNet& classifier) {
  std::vector<int> idx;
  idx.reserve(group.labels.size());
  for (const auto& lb : group.labels) idx.push_back(classifier.label_index(lb));
  return idx;
}

inline LossBreakdown hybrid_loss(const EraserNet& eraser, const ClassifierNet& embedder,
                                 const ClassifierNet& classifier, const ImageGroup& group,
                                 const LossConfig& cfg) {
  size_t G = group.size();
  if (G < 2) throw ConfigError("group too small for pairwise loss");
  std::vector<Tensor> sig, trs;
  sig.reserve(G);
  trs.reserve(G);
  for (const auto& p : group.patches) {
    auto dec = decompose(p.pixels, [&](const Tensor& t) { return eraser(t); });
    sig.push_back(std::move(dec.signal));
    trs.push_back(std::move(dec.trace));
  }
  LossBreakdown out;
  for (size_t g = 0; g < G; ++g)
    out.l_tf += truncated_fidelity(group.patches[g].pixels, sig[g], cfg.threshold) / double(G);
  out.l_es = embedded_similarity(sig, cfg.margin,
                                 [&](const Tensor& t) { return embedder.features(t); });
  out.l_ci = cross_identity(sig, trs, group_label_indices(group, classifier),
                            [&](const Tensor& t) { return classifier.logits(t); });
  return out;
}

/// Gradient step workhorse: accumulates d(hybrid)/d(eraser params) for one
/// group into the eraser's grad buffers and returns the loss breakdown.
/// Embedder and classifier stay frozen; they are usually the same network.
inline LossBreakdown hybrid_loss_grad(EraserNet& eraser, const ClassifierNet& embedder,
                                      const ClassifierNet& classifier, const ImageGroup& group,
                                      const LossConfig& cfg, double group_weight = 1.0) {
  size_t G = group.size();
  if (G < 2) throw ConfigError("group too small for pairwise loss");
  std::vector<int> labels = group_label_indices(group, classifier);

  std::vector<nn::Tape> eraser_tapes(G);
  std::vector<Tensor> sig(G), trs(G), gsig(G);
  for (size_t g = 0; g < G; ++g) {
    sig[g] = eraser.forward(group.patches[g].pixels, eraser_tapes[g]);
    if (!sig[g].all_finite()) throw NumericError("eraser produced non-finite values");
    trs[g] = group.patches[g].pixels;
    trs[g] -= sig[g];
    gsig[g] = Tensor::zeros(sig[g].c, sig[g].h, sig[g].w);
  }

  LossBreakdown out;

  // Fidelity term: direct gradient on each signal.
  for (size_t g = 0; g < G; ++g) {
    Tensor gtf;
    out.l_tf += truncated_fidelity(group.patches[g].pixels, sig[g], cfg.threshold, &gtf) / double(G);
    double w = cfg.lambda_tf / double(G);
    for (size_t i = 0; i < gsig[g].size(); ++i) gsig[g].data[i] += w * gtf.data[i];
  }

  // Similarity term: forward all embeddings, get feature grads, then pull
  // each back through the frozen trunk.
  {
    std::vector<nn::Tape> tapes(G);
    std::vector<Eigen::VectorXd> raw(G);
    std::vector<Tensor> feat(G);
    for (size_t g = 0; g < G; ++g) {
      feat[g] = embedder.forward_features(sig[g], tapes[g]);
      raw[g] = Eigen::Map<const Eigen::VectorXd>(feat[g].data.data(), feat[g].size());
    }
    std::vector<Eigen::VectorXd> graw;
    out.l_es = embedded_similarity_features(raw, cfg.margin, &graw);
    if (cfg.lambda_es != 0) {
      for (size_t g = 0; g < G; ++g) {
        Tensor gfeat(feat[g].c, feat[g].h, feat[g].w);
        Eigen::Map<Eigen::VectorXd>(gfeat.data.data(), gfeat.size()) = graw[g];
        Tensor gin = embedder.backward_features(gfeat, tapes[g], /*param_grads=*/false);
        double w = cfg.lambda_es;
        for (size_t i = 0; i < gsig[g].size(); ++i) gsig[g].data[i] += w * gin.data[i];
      }
    }
  }

  // Cross-identity term: one classifier round trip per synthesized image.
  // synth = sig[g] + im[s] - sig[s], so the input gradient lands positively
  // on signal g and negatively on signal s.
  {
    double shift_w = 1.0 / (double(G) * double(G - 1));
    for (size_t k = 1; k < G; ++k) {
      for (size_t g = 0; g < G; ++g) {
        size_t s = (g + k) % G;
        Tensor synth = sig[g];
        synth += trs[s];
        nn::Tape tape;
        Tensor logits_t = classifier.forward_logits(synth, tape);
        Eigen::VectorXd logits =
            Eigen::Map<const Eigen::VectorXd>(logits_t.data.data(), logits_t.size());
        Eigen::VectorXd gl;
        out.l_ci += shift_w * cross_entropy(logits, labels[s], &gl);
        if (cfg.lambda_ci == 0) continue;
        Tensor glt(logits_t.c, logits_t.h, logits_t.w);
        Eigen::Map<Eigen::VectorXd>(glt.data.data(), glt.size()) = gl * shift_w;
        Tensor gin = classifier.backward_logits(glt, tape, /*param_grads=*/false);
        double w = cfg.lambda_ci;
        for (size_t i = 0; i < gsig[g].size(); ++i) {
          gsig[g].data[i] += w * gin.data[i];
          gsig[s].data[i] -= w * gin.data[i];
        }
      }
    }
  }

  if (!std::isfinite(out.hybrid(cfg))) throw NumericError("non-finite hybrid loss");

  for (size_t g = 0; g < G; ++g) {
    if (group_weight != 1.0)
      for (auto& v : gsig[g].data) v *= group_weight;
    eraser.backward(gsig[g], eraser_tapes[g], /*param_grads=*/true);
  }
  return out;
}

}  // namespace siamte
