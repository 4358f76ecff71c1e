#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siamte/errors.hpp"
#include "siamte/nn/layers.hpp"
#include "siamte/rng.hpp"
#include "siamte/tensor.hpp"

namespace siamte {

// ---------------------------------------------------------------------------
// Trace eraser F: fully-convolutional residual image-to-image network.
// Inputs and outputs are in display units [0,255]; the network itself runs on
// a 1/255 scale. The final conv is zero-initialized, so a fresh eraser is the
// identity map exactly.
//
// Parameter count, depth d >= 2, width w:
//   first conv  w*(3*9) + w
//   middle      (d-2) * (w*(w*9) + w)
//   last conv   3*(w*9) + 3
// (d = 1 degenerates to a single zero-initialized 3->3 conv.)
// ---------------------------------------------------------------------------

struct EraserConfig {
  int depth = 4;
  int width = 16;
  bool residual = true;

  nlohmann::json to_json() const {
    return {{"depth", depth}, {"width", width}, {"residual", residual}};
  }
  static EraserConfig from_json(const nlohmann::json& j) {
    EraserConfig c;
    c.depth = j.at("depth").get<int>();
    c.width = j.at("width").get<int>();
    c.residual = j.value("residual", true);
    return c;
  }
};

class EraserNet {
 public:
  explicit EraserNet(const EraserConfig& cfg, uint64_t seed = 0) : cfg_(cfg) {
    if (cfg.depth < 1 || cfg.width < 1) throw ConfigError("eraser needs depth >= 1, width >= 1");
    auto trunk = std::make_unique<nn::Sequential>();
    if (cfg.depth == 1) {
      trunk->emplace<nn::Conv2d>(3, 3, 3, 1, 1, /*zero_init=*/true);
    } else {
      trunk->emplace<nn::Conv2d>(3, cfg.width, 3, 1, 1);
      trunk->emplace<nn::ReLU>();
      for (int i = 0; i < cfg.depth - 2; ++i) {
        trunk->emplace<nn::Conv2d>(cfg.width, cfg.width, 3, 1, 1);
        trunk->emplace<nn::ReLU>();
      }
      trunk->emplace<nn::Conv2d>(cfg.width, 3, 3, 1, 1, /*zero_init=*/true);
    }
    // The residual skip runs in display units so a zero-initialized final
    // conv yields the identity mapping bit-for-bit, not merely within
    // rounding of a scale round trip.
    if (cfg.residual) {
      auto inner = std::make_unique<nn::Sequential>();
      inner->emplace<nn::Scale>(1.0 / 255.0);
      inner->add(std::move(trunk));
      inner->emplace<nn::Scale>(255.0);
      net_.add(std::make_unique<nn::Residual>(std::move(inner)));
    } else {
      net_.emplace<nn::Scale>(1.0 / 255.0);
      net_.add(std::move(trunk));
      net_.emplace<nn::Scale>(255.0);
    }
    Rng rng(Rng::derive(seed, 0x45524153));
    net_.init(rng);
  }

  const EraserConfig& config() const { return cfg_; }

  Tensor forward(const Tensor& x, nn::Tape& tape) const {
    if (x.c != 3) throw ConfigError("eraser expects 3-channel input, got " + x.shape_str());
    return net_.forward(x, tape);
  }

  /// Gradient w.r.t. the input; parameter gradients accumulated when asked.
  Tensor backward(const Tensor& gy, nn::Tape& tape, bool param_grads) const {
    return net_.backward(gy, tape, param_grads);
  }

  /// Inference-only convenience.
  Tensor operator()(const Tensor& x) const {
    nn::Tape tape;
    return forward(x, tape);
  }

  std::vector<nn::ParamView> params() { return collect(); }

  size_t parameter_count() const { return nn::total_params(const_cast<EraserNet*>(this)->collect()); }

  std::vector<double> flat_params() const {
    auto views = const_cast<EraserNet*>(this)->collect();
    std::vector<double> out;
    for (auto& v : views) out.insert(out.end(), v.value, v.value + v.n);
    return out;
  }

  void set_flat_params(const std::vector<double>& flat) {
    auto views = collect();
    if (flat.size() != nn::total_params(views)) throw ConfigError("parameter count mismatch");
    size_t off = 0;
    for (auto& v : views) {
      std::copy(flat.begin() + off, flat.begin() + off + v.n, v.value);
      off += v.n;
    }
  }

 private:
  std::vector<nn::ParamView> collect() {
    std::vector<nn::ParamView> out;
    net_.collect_params(out);
    return out;
  }

  EraserConfig cfg_;
  nn::Sequential net_;
};

// ---------------------------------------------------------------------------
// Origin classifier C and embedder E. E is the classifier's convolutional
// trunk followed by global average pooling, so the feature length (4*width)
// is independent of input spatial size. The dense head maps features to
// per-camera logits.
// ---------------------------------------------------------------------------

struct ClassifierConfig {
  int width = 16;
  std::vector<std::string> vocabulary;

  nlohmann::json to_json() const { return {{"width", width}, {"vocabulary", vocabulary}}; }
  static ClassifierConfig from_json(const nlohmann::json& j) {
    ClassifierConfig c;
    c.width = j.at("width").get<int>();
    c.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    return c;
  }
};

class ClassifierNet {
 public:
  static constexpr int kMinInput = 16;

  explicit ClassifierNet(const ClassifierConfig& cfg, uint64_t seed = 0)
      : cfg_(cfg), head_(4 * cfg.width, int(cfg.vocabulary.size())) {
    if (cfg.width < 1) throw ConfigError("classifier needs width >= 1");
    if (cfg.vocabulary.size() < 2) throw ConfigError("classifier needs >= 2 camera types");
    int w = cfg.width;
    trunk_.emplace<nn::Scale>(1.0 / 255.0);
    trunk_.emplace<nn::Conv2d>(3, w, 3, 1, 1);
    trunk_.emplace<nn::ReLU>();
    add_block(w);
    trunk_.emplace<nn::Conv2d>(w, 2 * w, 3, 2, 1);
    trunk_.emplace<nn::ReLU>();
    add_block(2 * w);
    trunk_.emplace<nn::Conv2d>(2 * w, 4 * w, 3, 2, 1);
    trunk_.emplace<nn::ReLU>();
    add_block(4 * w);
    trunk_.emplace<nn::GlobalAvgPool>();
    Rng rng(Rng::derive(seed, 0x434c4153));
    trunk_.init(rng);
    head_.init(rng);
  }

  const ClassifierConfig& config() const { return cfg_; }
  const std::vector<std::string>& vocabulary() const { return cfg_.vocabulary; }
  int num_classes() const { return int(cfg_.vocabulary.size()); }
  int feature_dim() const { return 4 * cfg_.width; }

  int label_index(const std::string& label) const {
    for (size_t i = 0; i < cfg_.vocabulary.size(); ++i)
      if (cfg_.vocabulary[i] == label) return int(i);
    throw ConfigError("label outside classifier vocabulary: " + label);
  }

  Tensor forward_features(const Tensor& x, nn::Tape& tape) const {
    check_input(x);
    return trunk_.forward(x, tape);
  }

  Tensor backward_features(const Tensor& gfeat, nn::Tape& tape, bool param_grads) const {
    return trunk_.backward(gfeat, tape, param_grads);
  }

  Tensor forward_logits(const Tensor& x, nn::Tape& tape) const {
    return head_.forward(forward_features(x, tape), tape);
  }

  Tensor backward_logits(const Tensor& glogits, nn::Tape& tape, bool param_grads) const {
    return trunk_.backward(head_.backward(glogits, tape, param_grads), tape, param_grads);
  }

  /// Logit vector over the vocabulary (inference-only).
  Eigen::VectorXd logits(const Tensor& x) const {
    nn::Tape tape;
    Tensor y = forward_logits(x, tape);
    return Eigen::Map<const Eigen::VectorXd>(y.data.data(), y.size());
  }

  /// Raw (un-normalized) embedding feature; length feature_dim().
  Eigen::VectorXd features(const Tensor& x) const {
    nn::Tape tape;
    Tensor y = forward_features(x, tape);
    return Eigen::Map<const Eigen::VectorXd>(y.data.data(), y.size());
  }

  std::vector<nn::ParamView> params() { return collect(); }
  size_t parameter_count() const {
    return nn::total_params(const_cast<ClassifierNet*>(this)->collect());
  }

  std::vector<double> flat_params() const {
    auto views = const_cast<ClassifierNet*>(this)->collect();
    std::vector<double> out;
    for (auto& v : views) out.insert(out.end(), v.value, v.value + v.n);
    return out;
  }

  void set_flat_params(const std::vector<double>& flat) {
    auto views = collect();
    if (flat.size() != nn::total_params(views)) throw ConfigError("parameter count mismatch");
    size_t off = 0;
    for (auto& v : views) {
      std::copy(flat.begin() + off, flat.begin() + off + v.n, v.value);
      off += v.n;
    }
  }

 private:
  void add_block(int c) {
    auto inner = std::make_unique<nn::Sequential>();
    inner->emplace<nn::Conv2d>(c, c, 3, 1, 1);
    inner->emplace<nn::ReLU>();
    inner->emplace<nn::Conv2d>(c, c, 3, 1, 1);
    trunk_.add(std::make_unique<nn::Residual>(std::move(inner)));
    trunk_.emplace<nn::ReLU>();
  }

  void check_input(const Tensor& x) const {
    if (x.c != 3) throw ConfigError("classifier expects 3-channel input, got " + x.shape_str());
    if (x.h < kMinInput || x.w < kMinInput)
      throw ConfigError("patch below minimum classifier input size (" +
                        std::to_string(kMinInput) + "): " + x.shape_str());
  }

  std::vector<nn::ParamView> collect() {
    std::vector<nn::ParamView> out;
    trunk_.collect_params(out);
    head_.collect_params(out);
    return out;
  }

  ClassifierConfig cfg_;
  nn::Sequential trunk_;
  nn::Dense head_;
};

/// Logit vector for a patch (throws below minimum input size).
inline Eigen::VectorXd classify(const ClassifierNet& classifier, const Tensor& patch) {
  return classifier.logits(patch);
}

/// Raw feature vector; L2 normalization is the loss's job, not the embedder's.
inline Eigen::VectorXd embed(const ClassifierNet& embedder, const Tensor& patch) {
  return embedder.features(patch);
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd z = (logits.array() - logits.maxCoeff()).exp();
  return z / z.sum();
}

/// Cross-entropy of a logit vector against an integer label, and its gradient
/// (softmax minus one-hot).
inline double cross_entropy(const Eigen::VectorXd& logits, int label, Eigen::VectorXd* grad = nullptr) {
  if (label < 0 || label >= logits.size()) throw ConfigError("label index out of range");
  double mx = logits.maxCoeff();
  double lse = std::log((logits.array() - mx).exp().sum()) + mx;
  if (grad) {
    *grad = softmax(logits);
    (*grad)(label) -= 1.0;
  }
  return lse - logits(label);
}

// ---------------------------------------------------------------------------
// Checkpoints: "SIAMTE-CKPT-1\n" magic, little-endian u64 JSON header length,
// JSON header (kind, architecture, step, param count), raw doubles.
// ---------------------------------------------------------------------------

namespace ckpt {

constexpr char kMagic[] = "SIAMTE-CKPT-1\n";

inline void write(const std::filesystem::path& path, const nlohmann::json& header,
                  const std::vector<double>& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot write checkpoint: " + path.string());
  f.write(kMagic, sizeof(kMagic) - 1);
  std::string h = header.dump();
  uint64_t len = h.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(h.data(), std::streamsize(h.size()));
  f.write(reinterpret_cast<const char*>(params.data()),
          std::streamsize(params.size() * sizeof(double)));
  if (!f) throw MissingInputError("checkpoint write failed: " + path.string());
}

inline nlohmann::json read(const std::filesystem::path& path, std::vector<double>& params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic) - 1];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw MissingInputError("not a SIAMTE-CKPT-1 checkpoint: " + path.string());
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string h(len, '\0');
  f.read(h.data(), std::streamsize(len));
  nlohmann::json header = nlohmann::json::parse(h);
  uint64_t n = header.at("param_count").get<uint64_t>();
  params.resize(n);
  f.read(reinterpret_cast<char*>(params.data()), std::streamsize(n * sizeof(double)));
  if (!f) throw MissingInputError("truncated checkpoint: " + path.string());
  return header;
}

}  // namespace ckpt

inline void save_eraser_checkpoint(const std::filesystem::path& path, const EraserNet& net,
                                   uint64_t step) {
  auto params = net.flat_params();
  nlohmann::json h = {{"kind", "eraser"},
                      {"arch", net.config().to_json()},
                      {"step", step},
                      {"param_count", params.size()}};
  ckpt::write(path, h, params);
}

inline EraserNet load_eraser_checkpoint(const std::filesystem::path& path,
                                        uint64_t* step = nullptr) {
  std::vector<double> params;
  nlohmann::json h = ckpt::read(path, params);
  if (h.at("kind") != "eraser") throw ConfigError("checkpoint is not an eraser: " + path.string());
  EraserNet net(EraserConfig::from_json(h.at("arch")));
  net.set_flat_params(params);
  if (step) *step = h.at("step").get<uint64_t>();
  return net;
}

inline void save_classifier_checkpoint(const std::filesystem::path& path, const ClassifierNet& net,
                                       uint64_t step) {
  auto params = net.flat_params();
  nlohmann::json h = {{"kind", "classifier"},
                      {"arch", net.config().to_json()},
                      {"step", step},
                      {"param_count", params.size()}};
  ckpt::write(path, h, params);
}

inline ClassifierNet load_classifier_checkpoint(const std::filesystem::path& path,
                                                uint64_t* step = nullptr) {
  std::vector<double> params;
  nlohmann::json h = ckpt::read(path, params);
  if (h.at("kind") != "classifier")
    throw ConfigError("checkpoint is not a classifier: " + path.string());
  ClassifierNet net(ClassifierConfig::from_json(h.at("arch")));
  net.set_flat_params(params);
  if (step) *step = h.at("step").get<uint64_t>();
  return net;
}

}  // namespace siamte
