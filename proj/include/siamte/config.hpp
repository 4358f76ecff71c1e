#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "siamte/errors.hpp"
#include "siamte/models.hpp"
#include "siamte/synth.hpp"
#include "siamte/training.hpp"

namespace siamte {

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

/// Resolved run configuration. The file layout mirrors the struct: top-level
/// sections "data", "model", "loss", "optim", plus "synth" for corpus runs.
struct RunConfig {
  // data
  std::string data_root;
  std::string train_split = "train";
  std::string val_split = "val";
  std::string test_split = "test";
  // model
  EraserConfig eraser;
  int classifier_width = 16;
  // optim + loss
  TrainConfig train;
  // corpus generation
  SynthConfig synth;

  nlohmann::json to_json() const {
    nlohmann::json optim = train.to_json();
    optim.erase("loss");
    return {{"data",
             {{"root", data_root},
              {"train_split", train_split},
              {"val_split", val_split},
              {"test_split", test_split}}},
            {"model", {{"eraser", eraser.to_json()}, {"classifier_width", classifier_width}}},
            {"loss", train.loss.to_json()},
            {"optim", optim},
            {"synth", synth.to_json()}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    auto section = [&](const char* name) -> nlohmann::json {
      if (!j.contains(name)) return nlohmann::json::object();
      if (!j.at(name).is_object())
        throw ConfigError(std::string("config section '") + name + "' must be an object");
      return j.at(name);
    };
    try {
      nlohmann::json d = section("data");
      if (d.contains("root")) c.data_root = d.at("root").get<std::string>();
      if (d.contains("train_split")) c.train_split = d.at("train_split").get<std::string>();
      if (d.contains("val_split")) c.val_split = d.at("val_split").get<std::string>();
      if (d.contains("test_split")) c.test_split = d.at("test_split").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config section 'data': ") + e.what());
    }
    try {
      nlohmann::json m = section("model");
      if (m.contains("eraser")) c.eraser = EraserConfig::from_json(m.at("eraser"));
      if (m.contains("classifier_width"))
        c.classifier_width = m.at("classifier_width").get<int>();
      if (c.classifier_width < 1) throw ConfigError("model.classifier_width must be >= 1");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config section 'model': ") + e.what());
    }
    try {
      nlohmann::json o = section("optim");
      o["loss"] = section("loss");
      c.train = TrainConfig::from_json(o);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config section 'optim'/'loss': ") + e.what());
    }
    try {
      if (j.contains("synth")) c.synth = SynthConfig::from_json(section("synth"));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config section 'synth': ") + e.what());
    }
    return c;
  }

  static RunConfig from_file(const std::filesystem::path& path) {
    return from_json(load_json_file(path));
  }
};

}  // namespace siamte
