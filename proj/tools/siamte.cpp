// Command-line front end: corpus synthesis, training, erasing, baseline
// attacks, forensic evaluation, and report merging. Every command writes a
// run_manifest.json listing its inputs and outputs with content hashes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "siamte/baselines.hpp"
#include "siamte/config.hpp"
#include "siamte/dataset.hpp"
#include "siamte/forensics.hpp"
#include "siamte/manifest_log.hpp"
#include "siamte/metrics.hpp"
#include "siamte/models.hpp"
#include "siamte/parallel.hpp"
#include "siamte/report.hpp"
#include "siamte/residual.hpp"
#include "siamte/synth.hpp"
#include "siamte/training.hpp"

namespace fs = std::filesystem;
using namespace siamte;

namespace {

struct ImageEntry {
  fs::path abs;
  fs::path rel;        // relative to the input root
  std::string camera;  // immediate parent directory name
};

std::vector<ImageEntry> collect_images(const fs::path& root) {
  if (!fs::is_directory(root)) throw MissingInputError("input directory not found: " + root.string());
  std::vector<ImageEntry> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    for (auto& c : ext) c = char(std::tolower(c));
    if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
    ImageEntry ie;
    ie.abs = e.path();
    ie.rel = fs::relative(e.path(), root);
    ie.camera = e.path().parent_path().filename().string();
    out.push_back(std::move(ie));
  }
  std::sort(out.begin(), out.end(),
            [](const ImageEntry& a, const ImageEntry& b) { return a.rel < b.rel; });
  if (out.empty()) throw MissingInputError("no images under " + root.string());
  return out;
}

void add_outputs(RunManifest& m, const std::vector<fs::path>& files) {
  for (const auto& f : files) m.add_output(f);
}

void finish_manifest(RunManifest& m, const fs::path& dir) {
  m.finished_at = utc_timestamp();
  write_run_manifest(dir, m);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingInputError("cannot write: " + path.string());
  out << text;
}

std::string pair_csv(const char* value_name, const std::vector<std::pair<int, double>>& rows) {
  std::string csv = std::string("step,") + value_name + "\n";
  for (const auto& [step, v] : rows)
    csv += std::to_string(step) + "," + format_g17(v) + "\n";
  return csv;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out, config;
  int cameras = -1, images = -1, height = -1, width = -1;
  long long seed = -1;
};

int cmd_synth(const SynthArgs& a) {
  RunConfig rc;
  RunManifest man;
  man.command = "synth-corpus";
  man.started_at = utc_timestamp();
  if (!a.config.empty()) {
    rc = RunConfig::from_file(a.config);
    man.add_input(a.config);
  }
  if (a.cameras >= 0) rc.synth.cameras = a.cameras;
  if (a.images >= 0) rc.synth.images_per_camera = a.images;
  if (a.height >= 0) rc.synth.height = a.height;
  if (a.width >= 0) rc.synth.width = a.width;
  if (a.seed >= 0) rc.synth.seed = uint64_t(a.seed);
  rc.synth.validate();
  man.config = rc.synth.to_json();
  man.seed = rc.synth.seed;

  SynthSummary sum = synth_corpus(a.out, rc.synth);
  std::vector<fs::path> written;
  for (const auto& e : collect_images(a.out)) written.push_back(e.abs);
  add_outputs(man, written);
  finish_manifest(man, a.out);
  std::cout << "wrote " << sum.files_written << " images under " << a.out << " ("
            << sum.train_per_camera << " train / " << sum.val_per_camera << " val / "
            << sum.test_per_camera << " test per camera type)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config, target, out, classifier_ckpt, eraser_ckpt;
  int steps = -1;
  long long seed = -1;
};

std::string step_name(const std::string& prefix, int step) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_step_%06d.ckpt", prefix.c_str(), step);
  return buf;
}

int cmd_train(const TrainArgs& a) {
  RunConfig rc = RunConfig::from_file(a.config);
  if (rc.data_root.empty()) throw ConfigError("config field data.root is required");
  if (a.steps >= 0) rc.train.steps = a.steps;
  if (a.seed >= 0) rc.train.seed = uint64_t(a.seed);

  RunManifest man;
  man.command = "train:" + a.target;
  man.started_at = utc_timestamp();
  man.add_input(a.config);
  man.config = rc.to_json();
  man.seed = rc.train.seed;

  fs::path out(a.out);
  fs::create_directories(out);
  DatasetManifest train_m =
      scan_dataset(fs::path(rc.data_root) / rc.train_split, rc.train_split);
  DatasetManifest val_m = scan_dataset(fs::path(rc.data_root) / rc.val_split, rc.val_split);
  std::vector<fs::path> outputs;

  if (a.target == "classifier" || a.target == "trace-classifier") {
    PatchTransform transform;
    std::optional<EraserNet> eraser;
    if (a.target == "trace-classifier") {
      if (a.eraser_ckpt.empty())
        throw ConfigError("--eraser checkpoint is required for trace-classifier training");
      eraser = load_eraser_checkpoint(a.eraser_ckpt);
      man.add_input(a.eraser_ckpt);
      transform = [&eraser](const Tensor& patch) {
        Tensor trs = patch;
        trs -= (*eraser)(patch);
        return trace_to_display(trs);
      };
    }
    std::string prefix = a.target == "classifier" ? "classifier" : "trace_classifier";
    ClassifierConfig cc;
    cc.width = rc.classifier_width;
    cc.vocabulary = train_m.camera_names();
    fs::path step0 = out / step_name(prefix, 0);
    save_classifier_checkpoint(step0, ClassifierNet(cc, rc.train.seed), 0);
    outputs.push_back(step0);

    ClassifierTrainResult res =
        train_classifier(train_m, val_m, rc.train, rc.classifier_width, transform, &std::cout);
    fs::path final_p = out / (prefix + "_final.ckpt");
    save_classifier_checkpoint(final_p, res.net, uint64_t(rc.train.steps));
    outputs.push_back(final_p);

    write_text(out / "train_loss.csv", pair_csv("loss", res.loss_log));
    write_text(out / "val_accuracy.csv", pair_csv("accuracy", res.val_log));
    outputs.push_back(out / "train_loss.csv");
    outputs.push_back(out / "val_accuracy.csv");
    std::cout << "best validation accuracy " << res.best_accuracy << " at step " << res.best_step
              << "\n";
  } else if (a.target == "eraser") {
    if (a.classifier_ckpt.empty())
      throw ConfigError("--classifier checkpoint is required for eraser training");
    ClassifierNet cls = load_classifier_checkpoint(a.classifier_ckpt);
    man.add_input(a.classifier_ckpt);

    std::set<fs::path> saved;
    CheckpointHook hook = [&](int step, const EraserNet& net) {
      fs::path p = out / step_name("eraser", step);
      save_eraser_checkpoint(p, net, uint64_t(step));
      saved.insert(p);
    };
    EraserTrainResult res =
        train_eraser(train_m, cls, cls, rc.train, rc.eraser, hook, &std::cout);
    fs::path final_p = out / "eraser_final.ckpt";
    save_eraser_checkpoint(final_p, res.net, uint64_t(rc.train.steps));
    write_metrics_csv(out / "metrics.csv", res.log);
    outputs.insert(outputs.end(), saved.begin(), saved.end());
    outputs.push_back(final_p);
    outputs.push_back(out / "metrics.csv");
  } else {
    throw ConfigError("unknown training target: " + a.target);
  }

  add_outputs(man, outputs);
  finish_manifest(man, out);
  return 0;
}

// ---------------------------------------------------------------------------

struct ApplyArgs {
  std::string in, out, method = "siamte", eraser_ckpt, classifier_ckpt;
  int jobs = 1;
};

int apply_images(const ApplyArgs& a, const std::string& command) {
  TransformSpec spec = parse_transform(a.method);
  std::optional<EraserNet> eraser;
  std::optional<ClassifierNet> classifier;

  RunManifest man;
  man.command = command + ":" + a.method;
  man.started_at = utc_timestamp();
  man.config = {{"method", a.method}, {"in", a.in}, {"out", a.out}, {"jobs", a.jobs}};

  if (spec.kind == TransformSpec::Kind::siamte) {
    if (a.eraser_ckpt.empty()) throw ConfigError("--eraser checkpoint is required for siamte");
    eraser = load_eraser_checkpoint(a.eraser_ckpt);
    man.add_input(a.eraser_ckpt);
  }
  if (spec.kind == TransformSpec::Kind::adversarial) {
    if (a.classifier_ckpt.empty())
      throw ConfigError("--classifier checkpoint is required for adversarial dithering");
    classifier = load_classifier_checkpoint(a.classifier_ckpt);
    man.add_input(a.classifier_ckpt);
  }

  std::vector<ImageEntry> entries = collect_images(a.in);
  std::set<fs::path> dirs;
  for (const auto& e : entries) dirs.insert(fs::path(a.out) / e.rel.parent_path());
  for (const auto& d : dirs) fs::create_directories(d);

  std::vector<fs::path> outputs(entries.size());
  parallel_for(entries.size(), a.jobs, [&](size_t i) {
    const ImageEntry& e = entries[i];
    Tensor img = load_image(e.abs.string());
    TransformContext ctx;
    if (eraser) ctx.eraser = &*eraser;
    if (classifier) {
      ctx.classifier = &*classifier;
      ctx.true_label = e.camera;
    }
    Tensor result = apply_transform(spec, img, ctx);
    fs::path dst = fs::path(a.out) / e.rel.parent_path() / (e.rel.stem().string() + ".png");
    save_png(dst.string(), result);
    outputs[i] = dst;
  });

  add_outputs(man, outputs);
  finish_manifest(man, a.out);
  std::cout << "wrote " << outputs.size() << " images under " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string task, in, out, method = "ori";
  std::string classifier_ckpt, eraser_ckpt, fingerprints, reference, niqe_model;
  int patches = 4, patch_size = 48, repeats = 3, k = 0, patches_per_image = 8;
  int crop = 0, radius = 5;
  double gain = 16.0;
  long long seed = 0;
  int jobs = 1;
};

int cmd_evaluate(const EvalArgs& a) {
  RunManifest man;
  man.command = "evaluate:" + a.task;
  man.started_at = utc_timestamp();
  man.seed = uint64_t(a.seed);
  man.config = {{"task", a.task},       {"in", a.in},          {"method", a.method},
                {"patches", a.patches}, {"patch_size", a.patch_size},
                {"repeats", a.repeats}, {"seed", a.seed},      {"jobs", a.jobs}};

  DatasetManifest m = scan_dataset(a.in);
  EvaluationReport rep;

  if (a.task == "classification") {
    if (a.classifier_ckpt.empty()) throw ConfigError("--classifier checkpoint is required");
    ClassifierNet cls = load_classifier_checkpoint(a.classifier_ckpt);
    man.add_input(a.classifier_ckpt);
    ClassifyEvalConfig cfg{a.patches, a.patch_size, a.repeats, uint64_t(a.seed)};
    rep = classification_accuracy(m, cls, cfg, {}, a.method, "classification", a.jobs);
    std::cout << "accuracy " << rep.metrics.at("accuracy").mean << "\n";
  } else if (a.task == "clustering") {
    if (a.classifier_ckpt.empty()) throw ConfigError("--classifier checkpoint is required");
    ClassifierNet cls = load_classifier_checkpoint(a.classifier_ckpt);
    man.add_input(a.classifier_ckpt);
    ClusterEvalConfig cfg;
    cfg.k = a.k > 0 ? a.k : m.num_cameras();
    cfg.patches_per_image = a.patches_per_image;
    cfg.patch_size = a.patch_size;
    cfg.repeats = a.repeats;
    cfg.seed = uint64_t(a.seed);
    rep = clustering_accuracy(m, cls, cfg, {}, a.method, a.jobs);
    std::cout << "clustering accuracy " << rep.metrics.at("accuracy").mean << "\n";
  } else if (a.task == "verification") {
    if (a.fingerprints.empty()) throw ConfigError("--fingerprints file is required");
    VerifyConfig cfg;
    std::vector<CameraFingerprint> fps = load_fingerprints(a.fingerprints, &cfg.extractor);
    man.add_input(a.fingerprints);
    cfg.crop = a.crop;
    cfg.exclusion_radius = a.radius;
    rep = verification_report(m, fps, cfg, {}, a.method, a.jobs);
    std::cout << "mean PCE " << rep.metrics.at("pce").mean << "\n";
  } else if (a.task == "quality") {
    if (a.reference.empty()) throw ConfigError("--reference directory is required");
    if (a.niqe_model.empty()) throw ConfigError("--niqe-model file is required");
    NiqeModel model = load_niqe_model(a.niqe_model);
    man.add_input(a.niqe_model);
    DatasetManifest ref = scan_dataset(a.reference);
    rep = quality_report(m, ref, model, a.method, a.jobs);
    std::cout << "NIQE " << rep.metrics.at("niqe").mean << "  L1 " << rep.metrics.at("l1").mean
              << "\n";
  } else if (a.task == "trace-origin") {
    if (a.classifier_ckpt.empty() || a.eraser_ckpt.empty())
      throw ConfigError("--classifier and --eraser checkpoints are required");
    ClassifierNet cls = load_classifier_checkpoint(a.classifier_ckpt);
    EraserNet er = load_eraser_checkpoint(a.eraser_ckpt);
    man.add_input(a.classifier_ckpt);
    man.add_input(a.eraser_ckpt);
    ClassifyEvalConfig cfg{a.patches, a.patch_size, a.repeats, uint64_t(a.seed)};
    rep = trace_origin_accuracy(m, er, cls, cfg, a.gain, a.jobs);
    rep.method = a.method;
    std::cout << "trace-origin accuracy " << rep.metrics.at("accuracy").mean << "\n";
  } else {
    throw ConfigError("unknown task: " + a.task);
  }

  save_report(a.out, rep);
  man.add_output(a.out);
  finish_manifest(man, fs::path(a.out).parent_path().empty() ? "." : fs::path(a.out).parent_path());
  return 0;
}

// ---------------------------------------------------------------------------

struct FingerprintArgs {
  std::string in, out;
  int crop = 0;
  double sigma = 3.0;
  int jobs = 1;
};

int cmd_fingerprint(const FingerprintArgs& a) {
  RunManifest man;
  man.command = "fingerprint";
  man.started_at = utc_timestamp();
  man.config = {{"in", a.in}, {"crop", a.crop}, {"sigma", a.sigma}};

  DatasetManifest m = scan_dataset(a.in);
  ResidualConfig cfg;
  cfg.sigma = a.sigma;
  std::vector<CameraFingerprint> fps = build_fingerprints(m, cfg, a.crop, a.jobs);
  save_fingerprints(a.out, fps, cfg);
  for (const auto& fp : fps)
    std::cout << fp.camera << ": " << fp.count << " residuals, " << fp.residual.h << "x"
              << fp.residual.w << "\n";
  man.add_output(a.out);
  finish_manifest(man, fs::path(a.out).parent_path().empty() ? "." : fs::path(a.out).parent_path());
  return 0;
}

struct FitNiqeArgs {
  std::string in, out;
  int patch = 48, min_images = 50;
  double sharp = 0.75;
  int jobs = 1;
};

int cmd_fit_niqe(const FitNiqeArgs& a) {
  RunManifest man;
  man.command = "fit-niqe";
  man.started_at = utc_timestamp();
  man.config = {{"in", a.in}, {"patch", a.patch}, {"min_images", a.min_images},
                {"sharp", a.sharp}};

  std::vector<ImageEntry> entries = collect_images(a.in);
  std::vector<Tensor> images(entries.size());
  parallel_for(entries.size(), a.jobs,
               [&](size_t i) { images[i] = load_image(entries[i].abs.string()); });
  NiqeModel model = fit_niqe_model(images, a.patch, a.min_images, a.sharp);
  save_niqe_model(a.out, model);
  std::cout << "fitted pristine model on " << images.size() << " images ("
            << model.mean.size() << " features)\n";
  man.add_output(a.out);
  finish_manifest(man, fs::path(a.out).parent_path().empty() ? "." : fs::path(a.out).parent_path());
  return 0;
}

struct VisualizeArgs {
  std::string in, ckpt, out;
};

int cmd_visualize(const VisualizeArgs& a) {
  RunManifest man;
  man.command = "visualize";
  man.started_at = utc_timestamp();
  man.config = {{"in", a.in}, {"out", a.out}};

  EraserNet eraser = load_eraser_checkpoint(a.ckpt);
  man.add_input(a.ckpt);
  Tensor img = load_image(a.in);
  visualize_trace(img, eraser, a.out);
  man.add_output(a.out + "_trace.png");
  man.add_output(a.out + "_spectrum.png");
  fs::path dir = fs::path(a.out).parent_path();
  finish_manifest(man, dir.empty() ? "." : dir);
  std::cout << "wrote " << a.out << "_trace.png and " << a.out << "_spectrum.png\n";
  return 0;
}

struct ReportArgs {
  std::vector<std::string> in;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  RunManifest man;
  man.command = "report";
  man.started_at = utc_timestamp();

  std::vector<fs::path> files;
  for (const auto& p : a.in) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".json" &&
            e.path().filename() != "run_manifest.json")
          found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  if (files.empty()) throw MissingInputError("no report files given");

  std::vector<EvaluationReport> reports;
  for (const auto& f : files) {
    reports.push_back(load_report(f));
    man.add_input(f);
  }
  man.config = {{"inputs", files.size()}};
  std::string csv = merge_reports_csv(reports);
  write_text(a.out, csv);
  man.add_output(a.out);
  finish_manifest(man, fs::path(a.out).parent_path().empty() ? "." : fs::path(a.out).parent_path());
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SiamTE: siamese trace erasing and forensic evaluation"};
  app.require_subcommand(1);

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth-corpus", "render a synthetic multi-camera corpus");
  synth->add_option("--out", sy.out, "output directory")->required();
  synth->add_option("--config", sy.config, "JSON config with a synth section");
  synth->add_option("--cameras", sy.cameras, "number of camera profiles");
  synth->add_option("--images", sy.images, "images per camera type");
  synth->add_option("--height", sy.height, "image height");
  synth->add_option("--width", sy.width, "image width");
  synth->add_option("--seed", sy.seed, "corpus seed");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "train the classifier, the eraser, or a trace classifier");
  train->add_option("--config", tr.config, "JSON run config")->required();
  train->add_option("--target", tr.target, "classifier | eraser | trace-classifier")->required();
  train->add_option("--out", tr.out, "output directory")->required();
  train->add_option("--classifier", tr.classifier_ckpt, "frozen classifier checkpoint (eraser)");
  train->add_option("--eraser", tr.eraser_ckpt, "eraser checkpoint (trace-classifier)");
  train->add_option("--steps", tr.steps, "override optim.steps");
  train->add_option("--seed", tr.seed, "override optim.seed");

  ApplyArgs er;
  auto* erase = app.add_subcommand("erase", "apply a trained eraser to every image");
  erase->add_option("--in", er.in, "input directory")->required();
  erase->add_option("--ckpt", er.eraser_ckpt, "eraser checkpoint")->required();
  erase->add_option("--out", er.out, "output directory")->required();
  erase->add_option("--jobs", er.jobs, "worker threads");

  ApplyArgs at;
  auto* attack = app.add_subcommand("attack", "apply a named anti-forensic method");
  attack->add_option("--method", at.method, "ori|mf3|mf5|gf3|gf5|cp30|cp40|cp50|ad1|ad2|siamte")
      ->required();
  attack->add_option("--in", at.in, "input directory")->required();
  attack->add_option("--out", at.out, "output directory")->required();
  attack->add_option("--eraser", at.eraser_ckpt, "eraser checkpoint (siamte)");
  attack->add_option("--classifier", at.classifier_ckpt, "classifier checkpoint (ad1/ad2)");
  attack->add_option("--jobs", at.jobs, "worker threads");

  EvalArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "run a forensic evaluation task");
  evaluate
      ->add_option("--task", ev.task,
                   "classification | clustering | verification | quality | trace-origin")
      ->required();
  evaluate->add_option("--in", ev.in, "corpus directory to evaluate")->required();
  evaluate->add_option("--out", ev.out, "report JSON path")->required();
  evaluate->add_option("--method", ev.method, "method label for the report row");
  evaluate->add_option("--classifier", ev.classifier_ckpt, "classifier checkpoint");
  evaluate->add_option("--eraser", ev.eraser_ckpt, "eraser checkpoint (trace-origin)");
  evaluate->add_option("--fingerprints", ev.fingerprints, "fingerprint file (verification)");
  evaluate->add_option("--reference", ev.reference, "reference directory (quality)");
  evaluate->add_option("--niqe-model", ev.niqe_model, "pristine NIQE model (quality)");
  evaluate->add_option("--patches", ev.patches, "votes per image");
  evaluate->add_option("--patch-size", ev.patch_size, "patch side in pixels");
  evaluate->add_option("--repeats", ev.repeats, "evaluation repeats");
  evaluate->add_option("--k", ev.k, "cluster count (clustering)");
  evaluate->add_option("--patches-per-image", ev.patches_per_image, "patches per image (clustering)");
  evaluate->add_option("--crop", ev.crop, "verification crop (0 = auto)");
  evaluate->add_option("--radius", ev.radius, "PCE peak exclusion radius");
  evaluate->add_option("--gain", ev.gain, "trace display gain (trace-origin)");
  evaluate->add_option("--seed", ev.seed, "evaluation seed");
  evaluate->add_option("--jobs", ev.jobs, "worker threads");

  FingerprintArgs fp;
  auto* fingerprint = app.add_subcommand("fingerprint", "build per-camera fingerprints");
  fingerprint->add_option("--in", fp.in, "corpus directory")->required();
  fingerprint->add_option("--out", fp.out, "fingerprint file")->required();
  fingerprint->add_option("--crop", fp.crop, "center crop (0 = auto)");
  fingerprint->add_option("--sigma", fp.sigma, "denoiser noise level");
  fingerprint->add_option("--jobs", fp.jobs, "worker threads");

  FitNiqeArgs fn;
  auto* fitniqe = app.add_subcommand("fit-niqe", "fit the pristine NIQE model");
  fitniqe->add_option("--in", fn.in, "pristine corpus directory")->required();
  fitniqe->add_option("--out", fn.out, "model file")->required();
  fitniqe->add_option("--patch", fn.patch, "NIQE patch size");
  fitniqe->add_option("--min-images", fn.min_images, "minimum corpus size");
  fitniqe->add_option("--sharp", fn.sharp, "sharpness selection fraction");
  fitniqe->add_option("--jobs", fn.jobs, "worker threads");

  VisualizeArgs vz;
  auto* visualize = app.add_subcommand("visualize", "write trace and spectrum images");
  visualize->add_option("--in", vz.in, "input image")->required();
  visualize->add_option("--ckpt", vz.ckpt, "eraser checkpoint")->required();
  visualize->add_option("--out", vz.out, "output path prefix")->required();

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "merge evaluation reports into a CSV table");
  report->add_option("--in", rp.in, "report files or directories")->required()->expected(-1);
  report->add_option("--out", rp.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(sy);
    if (*train) return cmd_train(tr);
    if (*erase) {
      er.method = "siamte";
      return apply_images(er, "erase");
    }
    if (*attack) return apply_images(at, "attack");
    if (*evaluate) return cmd_evaluate(ev);
    if (*fingerprint) return cmd_fingerprint(fp);
    if (*fitniqe) return cmd_fit_niqe(fn);
    if (*visualize) return cmd_visualize(vz);
    if (*report) return cmd_report(rp);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const MissingInputError& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
