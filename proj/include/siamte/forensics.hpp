#pragma once

#include <algorithm>
#include <complex>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <fftw3.h>

#include "siamte/dataset.hpp"
#include "siamte/errors.hpp"
#include "siamte/image_io.hpp"
#include "siamte/kmeans.hpp"
#include "siamte/metrics.hpp"
#include "siamte/models.hpp"
#include "siamte/parallel.hpp"
#include "siamte/pce.hpp"
#include "siamte/report.hpp"
#include "siamte/residual.hpp"
#include "siamte/rng.hpp"

namespace siamte {

/// Per-image preprocessing hook (erasing, filtering, ...). Must be safe to
/// call from several worker threads at once.
using ImageTransform = std::function<Tensor(const Tensor&)>;

/// Display mapping for traces: mid-gray plus a fixed gain, clamped. Used both
/// when training the trace-only classifier and when evaluating it.
inline Tensor trace_to_display(const Tensor& trace, double gain = 16.0) {
  Tensor out = trace;
  for (double& v : out.data) v = std::clamp(128.0 + gain * v, 0.0, 255.0);
  return out;
}

namespace detail {

struct CorpusFile {
  std::string path;
  int camera = 0;  // index into the manifest's camera list
};

inline std::vector<CorpusFile> flatten(const DatasetManifest& manifest) {
  std::vector<CorpusFile> out;
  for (size_t ci = 0; ci < manifest.cameras.size(); ++ci)
    for (const auto& f : manifest.cameras[ci].files) out.push_back({f, int(ci)});
  return out;
}

/// Loads (and optionally transforms) every corpus image up front so the
/// per-image metric phase can run on a worker pool.
inline std::vector<Tensor> load_all(const std::vector<CorpusFile>& files,
                                    const ImageTransform& transform, int jobs) {
  std::vector<Tensor> out(files.size());
  parallel_for(files.size(), jobs, [&](size_t i) {
    Tensor img = load_image(files[i].path);
    out[i] = transform ? transform(img) : std::move(img);
  });
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Classification task: majority vote over random patches.
// ---------------------------------------------------------------------------

struct ClassifyEvalConfig {
  int patch_count = 4;
  int patch_size = 48;
  int repeats = 3;
  uint64_t seed = 0;
};

inline std::string classify_majority(const Tensor& image, const ClassifierNet& classifier,
                                     int patch_count, int patch_size, uint64_t seed) {
  if (patch_count < 1) throw ConfigError("patch count must be >= 1");
  if (image.h < patch_size || image.w < patch_size)
    throw ConfigError("image smaller than the classifier patch: " + image.shape_str());
  Rng rng(seed);
  std::vector<int> votes(classifier.num_classes(), 0);
  for (int i = 0; i < patch_count; ++i) {
    int y = rng.uniform_int(image.h - patch_size + 1);
    int x = rng.uniform_int(image.w - patch_size + 1);
    Eigen::VectorXd logits = classifier.logits(image.crop(y, x, patch_size, patch_size));
    int pred = 0;
    logits.maxCoeff(&pred);
    ++votes[pred];
  }
  int best = 0;
  for (int i = 1; i < int(votes.size()); ++i)
    if (votes[i] > votes[best]) best = i;  // ties keep the lowest vocabulary index
  return classifier.vocabulary()[best];
}

inline EvaluationReport classification_accuracy(const DatasetManifest& manifest,
                                                const ClassifierNet& classifier,
                                                const ClassifyEvalConfig& cfg,
                                                const ImageTransform& transform = {},
                                                const std::string& method = "ori",
                                                const std::string& task = "classification",
                                                int jobs = 1) {
  if (manifest.num_images() == 0) throw ConfigError("empty manifest");
  auto files = detail::flatten(manifest);
  std::vector<Tensor> images = detail::load_all(files, transform, jobs);

  size_t n = files.size();
  std::vector<char> correct(size_t(cfg.repeats) * n, 0);
  parallel_for(correct.size(), jobs, [&](size_t idx) {
    size_t r = idx / n, i = idx % n;
    uint64_t s = Rng::derive(cfg.seed, (r * 7919u + files[i].camera) * 104729u + i);
    std::string pred =
        classify_majority(images[i], classifier, cfg.patch_count, cfg.patch_size, s);
    correct[idx] = pred == manifest.cameras[files[i].camera].camera;
  });

  std::vector<double> overall;
  std::map<std::string, std::vector<double>> per_cam;
  for (int r = 0; r < cfg.repeats; ++r) {
    int ok = 0;
    std::map<std::string, std::pair<int, int>> cam_counts;
    for (size_t i = 0; i < n; ++i) {
      bool c = correct[size_t(r) * n + i];
      ok += c;
      auto& pr = cam_counts[manifest.cameras[files[i].camera].camera];
      pr.first += c;
      pr.second += 1;
    }
    overall.push_back(double(ok) / double(n));
    for (auto& [cam, pr] : cam_counts)
      per_cam[cam].push_back(double(pr.first) / double(pr.second));
  }

  EvaluationReport rep;
  rep.method = method;
  rep.task = task;
  rep.repeats = cfg.repeats;
  rep.metrics["accuracy"] = stat_of(overall);
  for (auto& [cam, xs] : per_cam) rep.per_camera[cam] = stat_of(xs);
  rep.validate();
  return rep;
}

// ---------------------------------------------------------------------------
// Clustering task: K-means over normalized embeddings; each cluster counts
// as its majority true origin.
// ---------------------------------------------------------------------------

struct ClusterEvalConfig {
  int k = 4;
  int patches_per_image = 8;
  int patch_size = 48;
  int repeats = 3;
  uint64_t seed = 0;
};

inline double clustering_accuracy_of(const std::vector<int>& assignment,
                                     const std::vector<int>& labels, int k,
                                     std::vector<int>* cluster_label = nullptr) {
  std::vector<std::map<int, int>> counts(k);
  for (size_t i = 0; i < assignment.size(); ++i) ++counts[assignment[i]][labels[i]];
  std::vector<int> majority(k, 0);
  for (int c = 0; c < k; ++c) {
    int best = -1, best_n = -1;
    for (auto& [lbl, n] : counts[c])
      if (n > best_n) {
        best = lbl;
        best_n = n;
      }
    majority[c] = best < 0 ? 0 : best;
  }
  int correct = 0;
  for (size_t i = 0; i < assignment.size(); ++i) correct += labels[i] == majority[assignment[i]];
  if (cluster_label) *cluster_label = majority;
  return assignment.empty() ? 0.0 : double(correct) / double(assignment.size());
}

inline EvaluationReport clustering_accuracy(const DatasetManifest& manifest,
                                            const ClassifierNet& embedder,
                                            const ClusterEvalConfig& cfg,
                                            const ImageTransform& transform = {},
                                            const std::string& method = "ori", int jobs = 1) {
  if (manifest.num_images() == 0) throw ConfigError("empty manifest");
  if (cfg.k < 1) throw ConfigError("K must be >= 1");
  auto files = detail::flatten(manifest);
  std::vector<Tensor> images = detail::load_all(files, transform, jobs);
  for (size_t i = 0; i < files.size(); ++i)
    if (images[i].h < cfg.patch_size || images[i].w < cfg.patch_size)
      throw ConfigError("image smaller than the embedding patch: " + files[i].path);

  size_t n = files.size();
  size_t per = size_t(cfg.patches_per_image);
  std::vector<Eigen::VectorXd> feats(size_t(cfg.repeats) * n * per);
  parallel_for(size_t(cfg.repeats) * n, jobs, [&](size_t idx) {
    size_t r = idx / n, i = idx % n;
    const Tensor& img = images[i];
    Rng rng(Rng::derive(cfg.seed, (r * 7919u + files[i].camera) * 104729u + i));
    for (size_t p = 0; p < per; ++p) {
      int y = rng.uniform_int(img.h - cfg.patch_size + 1);
      int x = rng.uniform_int(img.w - cfg.patch_size + 1);
      Eigen::VectorXd f = embedder.features(img.crop(y, x, cfg.patch_size, cfg.patch_size));
      double nn = f.norm();
      if (nn > 0) f /= nn;
      feats[(r * n + i) * per + p] = std::move(f);
    }
  });

  std::vector<double> overall;
  std::map<std::string, std::vector<double>> per_cam;
  for (int r = 0; r < cfg.repeats; ++r) {
    std::vector<Eigen::VectorXd> pts(feats.begin() + long(size_t(r) * n * per),
                                     feats.begin() + long(size_t(r + 1) * n * per));
    std::vector<int> labels(pts.size());
    for (size_t i = 0; i < n; ++i)
      for (size_t p = 0; p < per; ++p) labels[i * per + p] = files[i].camera;

    KMeansResult km = kmeans(pts, cfg.k, Rng::derive(cfg.seed, 0xC1D5 + r));
    std::vector<int> majority;
    overall.push_back(clustering_accuracy_of(km.assignment, labels, cfg.k, &majority));

    for (size_t ci = 0; ci < manifest.cameras.size(); ++ci) {
      int corr = 0, tot = 0;
      for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == int(ci)) {
          corr += majority[km.assignment[i]] == int(ci);
          ++tot;
        }
      per_cam[manifest.cameras[ci].camera].push_back(tot ? double(corr) / tot : 0.0);
    }
  }

  EvaluationReport rep;
  rep.method = method;
  rep.task = "clustering";
  rep.repeats = cfg.repeats;
  rep.metrics["accuracy"] = stat_of(overall);
  for (auto& [cam, xs] : per_cam) rep.per_camera[cam] = stat_of(xs);
  rep.validate();
  return rep;
}

// ---------------------------------------------------------------------------
// Verification task: PCE of each image's residual against its true camera
// fingerprint, on a common center crop.
// ---------------------------------------------------------------------------

struct VerifyConfig {
  int crop = 0;  // 0 = largest common square, capped at 512, multiple of 16
  int exclusion_radius = 5;
  ResidualConfig extractor;
};

inline int common_crop_size(const DatasetManifest& manifest, int cap = 512, int mult = 16) {
  int m = cap;
  for (const auto& cam : manifest.cameras)
    for (const auto& file : cam.files) {
      Tensor img = load_image(file);
      m = std::min(m, std::min(img.h, img.w));
    }
  m -= m % mult;
  if (m < mult) throw ConfigError("corpus images too small for verification crop");
  return m;
}

inline std::vector<CameraFingerprint> build_fingerprints(const DatasetManifest& manifest,
                                                         const ResidualConfig& cfg = {},
                                                         int crop = 0, int jobs = 1) {
  if (crop == 0) crop = common_crop_size(manifest);
  std::vector<CameraFingerprint> fps;
  for (const auto& cam : manifest.cameras) {
    std::vector<Tensor> residuals(cam.files.size());
    parallel_for(cam.files.size(), jobs, [&](size_t i) {
      residuals[i] = extract_noise_residual(load_image(cam.files[i]).center_crop(crop, crop), cfg);
    });
    fps.push_back(build_fingerprint(residuals, cam.camera));
  }
  return fps;
}

inline EvaluationReport verification_report(const DatasetManifest& manifest,
                                            const std::vector<CameraFingerprint>& fingerprints,
                                            const VerifyConfig& cfg,
                                            const ImageTransform& transform = {},
                                            const std::string& method = "ori", int jobs = 1) {
  if (manifest.num_images() == 0) throw ConfigError("empty manifest");
  int crop = cfg.crop ? cfg.crop : common_crop_size(manifest);

  std::map<std::string, const CameraFingerprint*> by_camera;
  for (const auto& fp : fingerprints) by_camera[fp.camera] = &fp;
  std::vector<Tensor> cam_fp(manifest.cameras.size());
  for (size_t ci = 0; ci < manifest.cameras.size(); ++ci) {
    auto it = by_camera.find(manifest.cameras[ci].camera);
    if (it == by_camera.end())
      throw MissingInputError("missing fingerprint for camera type: " +
                              manifest.cameras[ci].camera);
    if (it->second->residual.h < crop || it->second->residual.w < crop)
      throw ConfigError("fingerprint smaller than the verification crop");
    cam_fp[ci] = it->second->residual.center_crop(crop, crop);
  }

  auto files = detail::flatten(manifest);
  std::vector<double> vals(files.size());
  parallel_for(files.size(), jobs, [&](size_t i) {
    Tensor img = load_image(files[i].path);
    if (transform) img = transform(img);
    if (img.h < crop || img.w < crop)
      throw ConfigError("image smaller than the verification crop: " + files[i].path);
    Tensor res = extract_noise_residual(img.center_crop(crop, crop), cfg.extractor);
    vals[i] = pce(res, cam_fp[files[i].camera], cfg.exclusion_radius);
  });

  EvaluationReport rep;
  rep.method = method;
  rep.task = "verification";
  rep.repeats = 1;
  for (size_t ci = 0; ci < manifest.cameras.size(); ++ci) {
    std::vector<double> cam_vals;
    for (size_t i = 0; i < files.size(); ++i)
      if (files[i].camera == int(ci)) cam_vals.push_back(vals[i]);
    MetricStat s = stat_of(cam_vals);
    s.stddev = 0.0;  // deterministic task; the spread column reports repeats, not images
    rep.per_camera[manifest.cameras[ci].camera] = s;
  }
  MetricStat overall = stat_of(vals);
  overall.stddev = 0.0;
  rep.metrics["pce"] = overall;
  rep.validate();
  return rep;
}

// ---------------------------------------------------------------------------
// Image quality: no-reference NIQE plus mean L1 against the untouched copy.
// Processed and reference corpora are paired by camera and file stem.
// ---------------------------------------------------------------------------

inline EvaluationReport quality_report(const DatasetManifest& processed,
                                       const DatasetManifest& reference, const NiqeModel& model,
                                       const std::string& method, int jobs = 1) {
  if (processed.num_images() == 0) throw ConfigError("empty manifest");
  std::map<std::string, std::string> ref_by_key;
  for (const auto& cam : reference.cameras)
    for (const auto& file : cam.files)
      ref_by_key[cam.camera + "/" + std::filesystem::path(file).stem().string()] = file;

  auto files = detail::flatten(processed);
  std::vector<std::string> ref_files(files.size());
  for (size_t i = 0; i < files.size(); ++i) {
    std::string key = processed.cameras[files[i].camera].camera + "/" +
                      std::filesystem::path(files[i].path).stem().string();
    auto it = ref_by_key.find(key);
    if (it == ref_by_key.end()) throw MissingInputError("no reference image for " + files[i].path);
    ref_files[i] = it->second;
  }

  std::vector<double> niqes(files.size()), l1s(files.size());
  parallel_for(files.size(), jobs, [&](size_t i) {
    Tensor img = load_image(files[i].path);
    niqes[i] = niqe(img, model);
    l1s[i] = l1_distance(img, load_image(ref_files[i]));
  });

  EvaluationReport rep;
  rep.method = method;
  rep.task = "quality";
  rep.repeats = 1;
  rep.metrics["niqe"] = stat_of(niqes);
  rep.metrics["l1"] = stat_of(l1s);
  for (size_t ci = 0; ci < processed.cameras.size(); ++ci) {
    std::vector<double> cam_niqe;
    for (size_t i = 0; i < files.size(); ++i)
      if (files[i].camera == int(ci)) cam_niqe.push_back(niqes[i]);
    rep.per_camera[processed.cameras[ci].camera] = stat_of(cam_niqe);
  }
  rep.validate();
  return rep;
}

// ---------------------------------------------------------------------------
// Trace-only origin identification and trace visualization.
// ---------------------------------------------------------------------------

inline EvaluationReport trace_origin_accuracy(const DatasetManifest& manifest,
                                              const EraserNet& eraser,
                                              const ClassifierNet& trace_classifier,
                                              const ClassifyEvalConfig& cfg, double gain = 16.0,
                                              int jobs = 1) {
  ImageTransform to_trace = [&](const Tensor& img) {
    Tensor sig = eraser(img);
    Tensor trs = img;
    trs -= sig;
    return trace_to_display(trs, gain);
  };
  return classification_accuracy(manifest, trace_classifier, cfg, to_trace, "trace",
                                 "trace-origin", jobs);
}

namespace detail {

inline Tensor stretch_to_u8(const Tensor& t) {
  double lo = t.min(), hi = t.max();
  Tensor out(t.c, t.h, t.w);
  if (hi - lo <= 0) {
    std::fill(out.data.begin(), out.data.end(), 128.0);
    return out;
  }
  for (size_t i = 0; i < t.size(); ++i)
    out.data[i] = std::nearbyint(255.0 * (t.data[i] - lo) / (hi - lo));
  return out;
}

inline Tensor gray_to_rgb(const Tensor& g) {
  Tensor out(3, g.h, g.w);
  for (int ci = 0; ci < 3; ++ci) std::copy(g.data.begin(), g.data.end(), out.channel(ci));
  return out;
}

}  // namespace detail

/// Writes <prefix>_trace.png (contrast-stretched spatial trace) and
/// <prefix>_spectrum.png (centered log-magnitude Fourier spectrum).
inline void visualize_trace(const Tensor& image, const EraserNet& eraser,
                            const std::filesystem::path& prefix) {
  Tensor trace = image;
  trace -= eraser(image);

  save_png(prefix.string() + "_trace.png", detail::stretch_to_u8(trace));

  Tensor lum = trace.luminance();
  int h = lum.h, w = lum.w;
  std::vector<std::complex<double>> in(size_t(h) * w), out(size_t(h) * w);
  for (size_t i = 0; i < in.size(); ++i) in[i] = lum.data[i];
  fftw_plan p = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(in.data()),
                                 reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                                 FFTW_ESTIMATE);
  fftw_execute(p);
  fftw_destroy_plan(p);
  Tensor spec(1, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int sy = (y + h / 2) % h, sx = (x + w / 2) % w;  // center the DC bin
      spec.at(0, sy, sx) = std::log1p(std::abs(out[size_t(y) * w + x]));
    }
  save_png(prefix.string() + "_spectrum.png", detail::gray_to_rgb(detail::stretch_to_u8(spec)));
}

}  // namespace siamte
