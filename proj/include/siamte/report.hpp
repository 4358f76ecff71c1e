#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siamte/errors.hpp"

namespace siamte {

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;

  nlohmann::json to_json() const { return {{"mean", mean}, {"stddev", stddev}}; }
  static MetricStat from_json(const nlohmann::json& j) {
    return {j.at("mean").get<double>(), j.at("stddev").get<double>()};
  }
};

inline MetricStat stat_of(const std::vector<double>& xs) {
  MetricStat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= double(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = xs.size() > 1 ? std::sqrt(var / double(xs.size() - 1)) : 0.0;
  return s;
}

struct EvaluationReport {
  std::string method;
  std::string task;
  int repeats = 1;
  std::map<std::string, MetricStat> metrics;
  std::map<std::string, MetricStat> per_camera;

  void validate() const {
    if (repeats < 1) throw ConfigError("report repeats must be >= 1");
    for (const auto& [k, v] : metrics)
      if (v.stddev < 0) throw ConfigError("negative stddev in metric " + k);
  }

  nlohmann::json to_json() const {
    nlohmann::json m, pc;
    for (const auto& [k, v] : metrics) m[k] = v.to_json();
    for (const auto& [k, v] : per_camera) pc[k] = v.to_json();
    return {{"method", method},
            {"task", task},
            {"repeats", repeats},
            {"metrics", m},
            {"per_camera", pc}};
  }
  static EvaluationReport from_json(const nlohmann::json& j) {
    EvaluationReport r;
    r.method = j.at("method").get<std::string>();
    r.task = j.at("task").get<std::string>();
    r.repeats = j.at("repeats").get<int>();
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = MetricStat::from_json(v);
    for (const auto& [k, v] : j.at("per_camera").items())
      r.per_camera[k] = MetricStat::from_json(v);
    r.validate();
    return r;
  }
};

inline void save_report(const std::filesystem::path& path, const EvaluationReport& r) {
  std::ofstream f(path);
  if (!f) throw MissingInputError("cannot write report: " + path.string());
  f << r.to_json().dump(2) << "\n";
}

inline EvaluationReport load_report(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw MissingInputError("cannot open report: " + path.string());
  nlohmann::json j;
  f >> j;
  return EvaluationReport::from_json(j);
}

/// Merge per-method reports into one table: rows are methods, columns the
/// four headline metrics with their spreads. Missing cells stay empty.
inline std::string merge_reports_csv(const std::vector<EvaluationReport>& reports) {
  const char* cols[] = {"accuracy", "pce", "niqe", "l1"};
  std::map<std::string, std::map<std::string, MetricStat>> rows;
  std::vector<std::string> order;
  for (const auto& r : reports) {
    if (!rows.count(r.method)) order.push_back(r.method);
    for (const auto& [k, v] : r.metrics) {
      if (!std::isfinite(v.mean) || !std::isfinite(v.stddev))
        throw NumericError("non-finite metric '" + k + "' in method " + r.method);
      rows[r.method][k] = v;
    }
  }
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::string out = "method";
  for (const char* c : cols) out += std::string(",") + c + "," + c + "_std";
  out += "\n";
  for (const auto& method : order) {
    out += method;
    for (const char* c : cols) {
      auto it = rows[method].find(c);
      if (it == rows[method].end())
        out += ",,";
      else
        out += "," + fmt(it->second.mean) + "," + fmt(it->second.stddev);
    }
    out += "\n";
  }
  return out;
}

}  // namespace siamte
