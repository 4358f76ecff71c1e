#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "siamte/dataset.hpp"
#include "siamte/errors.hpp"
#include "siamte/losses.hpp"
#include "siamte/models.hpp"
#include "siamte/nn/adam.hpp"
#include "siamte/rng.hpp"

namespace siamte {

struct TrainConfig {
  int group_size = 4;
  int groups_per_batch = 8;
  int patch_size = 96;
  double lr = 1e-4;
  double momentum = 0.9;
  int steps = 1000;
  uint64_t seed = 0;
  LossConfig loss;
  int checkpoint_every = 0;
  int val_every = 200;
  int val_patches_per_type = 32;

  void validate() const {
    if (group_size < 2) throw ConfigError("group size must be >= 2");
    if (groups_per_batch < 1) throw ConfigError("groups per batch must be >= 1");
    if (patch_size < 1) throw ConfigError("patch size must be >= 1");
    if (!(lr > 0)) throw ConfigError("learning rate must be > 0");
    if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must be in [0,1)");
    if (steps < 0) throw ConfigError("step count must be >= 0");
  }

  nlohmann::json to_json() const {
    return {{"group_size", group_size},
            {"groups_per_batch", groups_per_batch},
            {"patch_size", patch_size},
            {"lr", lr},
            {"momentum", momentum},
            {"steps", steps},
            {"seed", seed},
            {"loss", loss.to_json()},
            {"checkpoint_every", checkpoint_every},
            {"val_every", val_every},
            {"val_patches_per_type", val_patches_per_type}};
  }
  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.group_size = j.value("group_size", c.group_size);
    c.groups_per_batch = j.value("groups_per_batch", c.groups_per_batch);
    c.patch_size = j.value("patch_size", c.patch_size);
    c.lr = j.value("lr", c.lr);
    c.momentum = j.value("momentum", c.momentum);
    c.steps = j.value("steps", c.steps);
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss")) c.loss = LossConfig::from_json(j.at("loss"));
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.val_every = j.value("val_every", c.val_every);
    c.val_patches_per_type = j.value("val_patches_per_type", c.val_patches_per_type);
    return c;
  }
};

/// Base rate halved at 60% and again at 85% of the run.
inline double scheduled_lr(double base, int step, int total_steps) {
  double f = total_steps > 0 ? double(step) / double(total_steps) : 0.0;
  double lr = base;
  if (f >= 0.60) lr *= 0.5;
  if (f >= 0.85) lr *= 0.5;
  return lr;
}

struct StepMetrics {
  int step = 0;
  double l_es = 0, l_tf = 0, l_ci = 0, hybrid = 0;
};

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<StepMetrics>& log) {
  std::ofstream f(path);
  if (!f) throw MissingInputError("cannot write metrics log: " + path.string());
  f << "step,l_es,l_tf,l_ci,hybrid\n";
  for (const auto& m : log)
    f << m.step << ',' << format_g17(m.l_es) << ',' << format_g17(m.l_tf) << ','
      << format_g17(m.l_ci) << ',' << format_g17(m.hybrid) << '\n';
}

using PatchTransform = std::function<Tensor(const Tensor&)>;

// ---------------------------------------------------------------------------
// Origin-classifier training: plain cross-entropy on single labeled patches,
// periodic validation, best-validation parameters kept. The optional
// transform maps each patch before it reaches the network (used to train the
// trace-only classifier); it applies to validation patches too.
// ---------------------------------------------------------------------------

struct ClassifierTrainResult {
  ClassifierNet net;
  std::vector<std::pair<int, double>> loss_log;
  std::vector<std::pair<int, double>> val_log;
  double best_accuracy = 0.0;
  int best_step = -1;
};

inline double classifier_accuracy(const ClassifierNet& net, PatchSampler& sampler,
                                  const TrainConfig& cfg, const PatchTransform& transform,
                                  uint64_t salt) {
  int per_type = cfg.val_patches_per_type;
  const auto& manifest = sampler.manifest();
  int correct = 0, total = 0;
  for (int ci = 0; ci < manifest.num_cameras(); ++ci) {
    const auto& cam = manifest.cameras[ci];
    int lbl = net.label_index(cam.camera);
    for (int i = 0; i < per_type; ++i) {
      uint64_t s = Rng::derive(salt, uint64_t(ci) * 100003ull + uint64_t(i) + 1);
      Rng rng(s);
      std::vector<Tensor> crop =
          sampler.sample_crops(cam.files[rng.uniform_int(int(cam.files.size()))], cfg.patch_size,
                               1, rng.next_u64());
      Tensor x = transform ? transform(crop[0]) : crop[0];
      Eigen::VectorXd logits = net.logits(x);
      int pred = 0;
      logits.maxCoeff(&pred);
      correct += (pred == lbl);
      ++total;
    }
  }
  return total ? double(correct) / double(total) : 0.0;
}

inline ClassifierTrainResult train_classifier(const DatasetManifest& train_manifest,
                                              const DatasetManifest& val_manifest,
                                              const TrainConfig& cfg, int width = 16,
                                              const PatchTransform& transform = {},
                                              std::ostream* progress = nullptr) {
  cfg.validate();
  if (train_manifest.num_cameras() < 2)
    throw ConfigError("classifier training needs >= 2 camera types");

  ClassifierConfig ccfg;
  ccfg.width = width;
  ccfg.vocabulary = train_manifest.camera_names();
  ClassifierTrainResult out{ClassifierNet(ccfg, cfg.seed), {}, {}, 0.0, -1};
  ClassifierNet& net = out.net;

  PatchSampler train_sampler(train_manifest);
  PatchSampler val_sampler(val_manifest);
  auto params = net.params();
  nn::Adam adam(params, cfg.lr, cfg.momentum);
  int batch = cfg.groups_per_batch * cfg.group_size;
  std::vector<double> best_params;

  for (int step = 0; step < cfg.steps; ++step) {
    adam.set_lr(scheduled_lr(cfg.lr, step, cfg.steps));
    adam.zero_grads();
    double ce_sum = 0.0;
    for (int b = 0; b < batch; ++b) {
      uint64_t s = Rng::derive(cfg.seed, uint64_t(step) * 1000003ull + uint64_t(b) + 1);
      ImagePatch p = train_sampler.sample_labeled_patch(cfg.patch_size, s);
      Tensor x = transform ? transform(p.pixels) : p.pixels;
      int lbl = net.label_index(p.origin);
      nn::Tape tape;
      Tensor logits_t = net.forward_logits(x, tape);
      Eigen::VectorXd logits =
          Eigen::Map<const Eigen::VectorXd>(logits_t.data.data(), logits_t.size());
      Eigen::VectorXd gl;
      double ce = cross_entropy(logits, lbl, &gl);
      if (!std::isfinite(ce))
        throw NumericError("non-finite classifier loss at step " + std::to_string(step));
      ce_sum += ce;
      Tensor glt(logits_t.c, logits_t.h, logits_t.w);
      Eigen::Map<Eigen::VectorXd>(glt.data.data(), glt.size()) = gl / double(batch);
      net.backward_logits(glt, tape, /*param_grads=*/true);
    }
    adam.step();
    out.loss_log.emplace_back(step, ce_sum / batch);

    bool last = step == cfg.steps - 1;
    if ((cfg.val_every > 0 && (step + 1) % cfg.val_every == 0) || last) {
      double acc = classifier_accuracy(net, val_sampler, cfg, transform,
                                       Rng::derive(cfg.seed, 0x56414c00u));
      out.val_log.emplace_back(step, acc);
      if (acc > out.best_accuracy || out.best_step < 0) {
        out.best_accuracy = acc;
        out.best_step = step;
        best_params = net.flat_params();
      }
      if (progress)
        (*progress) << "step " << step << "  ce " << format_g17(ce_sum / batch) << "  val " << acc
                    << "\n";
    }
  }
  if (!best_params.empty()) net.set_flat_params(best_params);
  return out;
}

// ---------------------------------------------------------------------------
// Siamese eraser training on the hybrid loss. The classifier and embedder
// are read-only oracles; their parameters are bit-identical before and after.
// The per-step log records batch-mean raw terms and the weighted hybrid.
// ---------------------------------------------------------------------------

struct EraserTrainResult {
  EraserNet net;
  std::vector<StepMetrics> log;
};

using CheckpointHook = std::function<void(int step, const EraserNet&)>;

inline EraserTrainResult train_eraser(const DatasetManifest& train_manifest,
                                      const ClassifierNet& classifier,
                                      const ClassifierNet& embedder, const TrainConfig& cfg,
                                      const EraserConfig& arch = {},
                                      const CheckpointHook& on_checkpoint = {},
                                      std::ostream* progress = nullptr) {
  cfg.validate();
  if (train_manifest.num_cameras() < cfg.group_size)
    throw ConfigError("manifest has fewer camera types than the group size");

  EraserTrainResult out{EraserNet(arch, cfg.seed), {}};
  EraserNet& net = out.net;
  PatchSampler sampler(train_manifest);
  auto params = net.params();
  nn::Adam adam(params, cfg.lr, cfg.momentum);

  if (on_checkpoint) on_checkpoint(0, net);
  for (int step = 0; step < cfg.steps; ++step) {
    adam.set_lr(scheduled_lr(cfg.lr, step, cfg.steps));
    adam.zero_grads();
    StepMetrics m;
    m.step = step;
    for (int b = 0; b < cfg.groups_per_batch; ++b) {
      uint64_t s = Rng::derive(cfg.seed, 0x47525000ull + uint64_t(step) * 1000003ull + uint64_t(b));
      ImageGroup group = sampler.sample_group(cfg.group_size, cfg.patch_size, s);
      LossBreakdown lb;
      try {
        lb = hybrid_loss_grad(net, embedder, classifier, group, cfg.loss,
                              1.0 / double(cfg.groups_per_batch));
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at step " + std::to_string(step));
      }
      m.l_es += lb.l_es / cfg.groups_per_batch;
      m.l_tf += lb.l_tf / cfg.groups_per_batch;
      m.l_ci += lb.l_ci / cfg.groups_per_batch;
    }
    m.hybrid = cfg.loss.lambda_es * m.l_es + cfg.loss.lambda_tf * m.l_tf + cfg.loss.lambda_ci * m.l_ci;
    if (!std::isfinite(m.hybrid))
      throw NumericError("non-finite hybrid loss at step " + std::to_string(step));
    adam.step();
    out.log.push_back(m);
    if (on_checkpoint && cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0)
      on_checkpoint(step + 1, net);
    if (progress && (step % 50 == 0 || step == cfg.steps - 1))
      (*progress) << "step " << step << "  es " << m.l_es << "  tf " << m.l_tf << "  ci " << m.l_ci
                  << "  hybrid " << m.hybrid << "\n";
  }
  if (on_checkpoint) on_checkpoint(cfg.steps, net);
  return out;
}

}  // namespace siamte
