#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siamte/errors.hpp"
#include "siamte/image_io.hpp"
#include "siamte/rng.hpp"
#include "siamte/tensor.hpp"

namespace siamte {

namespace fs = std::filesystem;

/// One crop taken from a dataset image, with its provenance.
struct ImagePatch {
  Tensor pixels;          // 3xHxW in [0,255]
  std::string origin;     // camera-type identifier
  std::string source_id;  // path of the parent image
};

/// G patches from G pairwise-distinct camera types; the unit of Siamese
/// training. G = 1 is permitted (distinctness then holds trivially); the
/// pairwise losses themselves require G >= 2 and say so when violated.
struct ImageGroup {
  std::vector<ImagePatch> patches;
  std::vector<std::string> labels;

  int size() const { return int(patches.size()); }

  void validate() const {
    if (patches.empty() || patches.size() != labels.size())
      throw ConfigError("image group: patches/labels length mismatch");
    for (size_t i = 0; i < labels.size(); ++i)
      for (size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j]) throw ConfigError("image group origins must be distinct");
  }
};

struct CameraEntries {
  std::string camera;
  std::vector<std::string> files;  // absolute paths, lexicographic
};

/// Immutable listing of a dataset root laid out as <root>/<camera>/<files>.
struct DatasetManifest {
  std::string root;
  std::string split;  // "train" / "val" / "test" / free-form tag
  std::vector<CameraEntries> cameras;
  std::vector<std::string> warnings;  // files that failed to decode

  int num_cameras() const { return int(cameras.size()); }

  int num_images() const {
    int n = 0;
    for (const auto& c : cameras) n += int(c.files.size());
    return n;
  }

  std::vector<std::string> camera_names() const {
    std::vector<std::string> names;
    for (const auto& c : cameras) names.push_back(c.camera);
    return names;
  }

  const CameraEntries& find(const std::string& camera) const {
    for (const auto& c : cameras)
      if (c.camera == camera) return c;
    throw MissingInputError("camera type not in manifest: " + camera);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["root"] = root;
    j["split"] = split;
    j["cameras"] = nlohmann::json::array();
    for (const auto& c : cameras) j["cameras"].push_back({{"camera", c.camera}, {"files", c.files}});
    j["warnings"] = warnings;
    return j;
  }

  static DatasetManifest from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.root = j.at("root").get<std::string>();
    m.split = j.value("split", std::string());
    for (const auto& c : j.at("cameras")) {
      CameraEntries e;
      e.camera = c.at("camera").get<std::string>();
      e.files = c.at("files").get<std::vector<std::string>>();
      m.cameras.push_back(std::move(e));
    }
    m.warnings = j.value("warnings", std::vector<std::string>());
    return m;
  }
};

/// Enumerate <root>/<camera>/<images>. Every listed file has been fully
/// decoded once; undecodable files are skipped and recorded as warnings.
/// Ordering is lexicographic throughout, so the result is deterministic.
inline DatasetManifest scan_dataset(const fs::path& root, const std::string& split = "") {
  if (!fs::is_directory(root)) throw MissingInputError("dataset root not found: " + root.string());
  DatasetManifest m;
  m.root = fs::absolute(root).string();
  m.split = split;

  std::vector<std::string> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path().filename().string());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw MissingInputError("no camera types found under " + root.string());

  for (const auto& d : dirs) {
    CameraEntries ce;
    ce.camera = d;
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(root / d))
      if (e.is_regular_file()) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        load_image(f);
        ce.files.push_back(fs::absolute(f).string());
      } catch (const std::exception& ex) {
        m.warnings.push_back(f + ": " + ex.what());
      }
    }
    if (!ce.files.empty()) m.cameras.push_back(std::move(ce));
  }
  if (m.cameras.empty()) throw MissingInputError("no camera types found under " + root.string());
  return m;
}

/// Samples grouped patches from a manifest. Holds a bounded decode cache;
/// the manifest itself stays immutable, so samplers with independent seeds
/// may run concurrently on their own instances.
class PatchSampler {
 public:
  explicit PatchSampler(const DatasetManifest& manifest, size_t cache_cap = 512)
      : manifest_(manifest), cache_cap_(cache_cap) {}

  const DatasetManifest& manifest() const { return manifest_; }

  /// G patches of patch_size^2 from G distinct uniformly-drawn camera types,
  /// crop positions uniform over valid offsets. Pure in (manifest, G,
  /// patch_size, seed). Images smaller than patch_size are excluded; a camera
  /// type whose images are all too small is an error.
  ImageGroup sample_group(int group_size, int patch_size, uint64_t seed) {
    if (group_size < 1) throw ConfigError("group size must be >= 1");
    if (patch_size < 1) throw ConfigError("patch size must be >= 1");
    if (manifest_.num_cameras() < group_size)
      throw ConfigError("manifest has " + std::to_string(manifest_.num_cameras()) +
                        " camera types, need " + std::to_string(group_size));
    Rng rng(seed);
    auto cam_idx = sample_distinct(rng, manifest_.num_cameras(), group_size);
    ImageGroup group;
    for (int gi = 0; gi < group_size; ++gi) {
      const auto& cam = manifest_.cameras[cam_idx[gi]];
      ImagePatch p = sample_patch(cam, patch_size, rng);
      group.labels.push_back(p.origin);
      group.patches.push_back(std::move(p));
    }
    group.validate();
    return group;
  }

  /// Single labeled patch from a uniformly-drawn camera type.
  ImagePatch sample_labeled_patch(int patch_size, uint64_t seed) {
    Rng rng(seed);
    const auto& cam = manifest_.cameras[rng.uniform_int(manifest_.num_cameras())];
    return sample_patch(cam, patch_size, rng);
  }

  /// n random crops from one specific image.
  std::vector<Tensor> sample_crops(const std::string& file, int patch_size, int n, uint64_t seed) {
    Rng rng(seed);
    const Tensor& img = image(file);
    if (img.h < patch_size || img.w < patch_size)
      throw ConfigError("image smaller than patch size: " + file);
    std::vector<Tensor> crops;
    for (int i = 0; i < n; ++i) {
      int y = rng.uniform_int(img.h - patch_size + 1);
      int x = rng.uniform_int(img.w - patch_size + 1);
      crops.push_back(img.crop(y, x, patch_size, patch_size));
    }
    return crops;
  }

  const Tensor& image(const std::string& file) {
    auto it = cache_.find(file);
    if (it != cache_.end()) return *it->second;
    if (cache_.size() >= cache_cap_) cache_.clear();
    auto t = std::make_unique<Tensor>(load_image(file));
    return *(cache_[file] = std::move(t));
  }

 private:
  ImagePatch sample_patch(const CameraEntries& cam, int patch_size, Rng& rng) {
    // Draw an image uniformly, retrying past too-small images; error only if
    // the whole type is too small. Sampling is with replacement across draws.
    std::vector<int> candidates(cam.files.size());
    for (size_t i = 0; i < candidates.size(); ++i) candidates[i] = int(i);
    while (!candidates.empty()) {
      int pick = rng.uniform_int(int(candidates.size()));
      const std::string& file = cam.files[candidates[pick]];
      const Tensor& img = image(file);
      if (img.h >= patch_size && img.w >= patch_size) {
        int y = rng.uniform_int(img.h - patch_size + 1);
        int x = rng.uniform_int(img.w - patch_size + 1);
        ImagePatch p;
        p.pixels = img.crop(y, x, patch_size, patch_size);
        p.origin = cam.camera;
        p.source_id = file;
        return p;
      }
      candidates.erase(candidates.begin() + pick);
    }
    throw ConfigError("camera type '" + cam.camera + "' has no image of size >= " +
                      std::to_string(patch_size));
  }

  const DatasetManifest& manifest_;
  size_t cache_cap_;
  std::map<std::string, std::unique_ptr<Tensor>> cache_;
};

/// Free-function form; pure in (manifest, G, patch_size, seed).
inline ImageGroup sample_group(const DatasetManifest& manifest, int group_size, int patch_size,
                               uint64_t seed) {
  PatchSampler s(manifest);
  return s.sample_group(group_size, patch_size, seed);
}

/// Additive decomposition im = sig + trs. The reconstruction is exact by
/// construction; the invariant is still checked to catch non-finite model
/// output.
struct TraceDecomposition {
  Tensor signal;
  Tensor trace;
};

template <class EraseFn>
TraceDecomposition decompose(const Tensor& image, EraseFn&& eraser) {
  TraceDecomposition d;
  d.signal = eraser(image);
  if (!d.signal.same_shape(image))
    throw NumericError("eraser changed shape: " + image.shape_str() + " -> " +
                       d.signal.shape_str());
  if (!d.signal.all_finite()) throw NumericError("eraser produced non-finite values");
  d.trace = image - d.signal;
  return d;
}

}  // namespace siamte
