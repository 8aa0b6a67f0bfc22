#pragma once
// Directory-level batch operations: features for every record of a dataset,
// and loading them back as evaluation samples.
//
// Feature layout: <root>/<method>/<bridge>/<Rs>/<loc>/<trial>.csv (pos,y_d,valid)
// with a sibling .json manifest, plus <root>/index.json.

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibhm/dataset.hpp"
#include "ibhm/diagnose.hpp"
#include "ibhm/feature.hpp"

namespace ibhm::pipeline {

namespace fs = std::filesystem;

struct ExtractConfig {
  std::vector<feature::Method> methods{feature::Method::ours};
  double f_hi = 1.0;
  std::optional<tfr::Band> band;  // overrides band selection when set
  std::size_t grid_points = 1001;  // features are stored on a uniform x/L grid
  int jobs = 1;
  bool overwrite = false;
  feature::ExtractOptions options{};
};

struct ExtractFailure {
  std::string record;
  std::string error;
};

struct ExtractReport {
  std::size_t n_records = 0;
  std::size_t n_ok = 0;
  std::vector<ExtractFailure> failures;
};

inline ExtractReport extract_dataset(const fs::path& data_root, const fs::path& out_root, const ExtractConfig& cfg,
                                     const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  if (cfg.methods.empty()) throw ConfigError("no feature methods requested");
  if (cfg.grid_points < 16) throw ConfigError("feature grid needs at least 16 points");
  const auto index = dataset::read_index(data_root);
  if (index.empty()) throw DataError("dataset index is empty");
  dataset::prepare_output_dir(out_root, cfg.overwrite);
  const auto grid = feature::uniform_grid(cfg.grid_points);

  ExtractReport rep;
  rep.n_records = index.size();
  std::vector<std::optional<std::string>> errors(index.size());
  std::vector<nlohmann::json> entries(index.size());
  std::mutex mu;
  std::size_t done = 0;
  dataset::parallel_for(index.size(), cfg.jobs, [&](std::size_t i) {
    const auto& ir = index[i];
    const std::string stem = ir.key.rel_stem();
    try {
      if (!fs::exists(ir.csv)) throw DataError("missing record file");
      const SignalRecord rec = dataset::read_record(ir.csv);
      const auto mf = feature::extract_all(rec, cfg.methods, cfg.f_hi, cfg.band, cfg.options);
      for (const auto& [m, f] : mf.features) {
        const auto g = feature::resample(f, grid);
        const fs::path base = out_root / feature::method_name(m) / stem;
        fs::create_directories(base.parent_path());
        feature::write_feature_csv(base.string() + ".csv", g);
        auto j = feature::feature_manifest(f, m, m == feature::Method::ours ? mf.sys : std::nullopt);
        j["record"] = stem;
        j["bridge"] = ir.key.bridge_id;
        j["R_s"] = rec.scenario.damage.R_s;
        j["x_s_over_L"] = ir.key.loc ? nlohmann::json(*ir.key.loc) : nlohmann::json(nullptr);
        j["trial"] = ir.key.trial;
        dataset::write_text(base.string() + ".json", j.dump(2) + "\n");
      }
      nlohmann::json e;
      e["record"] = stem;
      e["bridge"] = ir.key.bridge_id;
      e["R_s"] = rec.scenario.damage.R_s;
      e["x_s_over_L"] = ir.key.loc ? nlohmann::json(*ir.key.loc) : nlohmann::json(nullptr);
      e["trial"] = ir.key.trial;
      entries[i] = std::move(e);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
    std::lock_guard lock(mu);
    ++done;
    if (progress) progress(done, index.size());
  });

  nlohmann::json idx;
  idx["methods"] = nlohmann::json::array();
  for (auto m : cfg.methods) idx["methods"].push_back(feature::method_name(m));
  idx["grid_points"] = cfg.grid_points;
  idx["records"] = nlohmann::json::array();
  idx["failures"] = nlohmann::json::array();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (errors[i]) {
      rep.failures.push_back({index[i].key.rel_stem(), *errors[i]});
      idx["failures"].push_back({{"record", index[i].key.rel_stem()}, {"error", *errors[i]}});
    } else {
      ++rep.n_ok;
      idx["records"].push_back(entries[i]);
    }
  }
  dataset::write_text(out_root / "index.json", idx.dump(1) + "\n");
  return rep;
}

/// Loads one method's features as evaluation samples.
inline std::vector<diagnose::Sample> load_samples(const fs::path& features_root, feature::Method m) {
  const fs::path p = features_root / "index.json";
  if (!fs::exists(p)) throw ConfigError("no feature index under " + features_root.string());
  nlohmann::json idx;
  try {
    idx = nlohmann::json::parse(dataset::read_text(p));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed feature index: ") + e.what());
  }
  const fs::path dir = features_root / feature::method_name(m);
  if (!fs::exists(dir)) throw ConfigError(std::string("no features for method ") + feature::method_name(m));
  std::vector<diagnose::Sample> out;
  for (const auto& e : idx.at("records")) {
    diagnose::Sample s;
    s.key = e.at("record").get<std::string>();
    s.bridge_id = e.at("bridge").get<std::string>();
    s.R_true = e.at("R_s").get<double>();
    if (!e.at("x_s_over_L").is_null()) s.x_true = e.at("x_s_over_L").get<double>();
    s.feature = feature::read_feature_csv((dir / (s.key + ".csv")).string());
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ConfigError("feature directory holds no records");
  return out;
}

inline std::vector<feature::Method> available_methods(const fs::path& features_root) {
  std::vector<feature::Method> out;
  for (auto m : {feature::Method::ours, feature::Method::bandpass1, feature::Method::icwt1, feature::Method::raw})
    if (fs::exists(features_root / feature::method_name(m))) out.push_back(m);
  return out;
}

}  // namespace ibhm::pipeline
