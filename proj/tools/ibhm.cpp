// ibhm: dataset generation, feature extraction, evaluation and plotting.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ibhm/ibhm.hpp"

namespace fs = std::filesystem;
using namespace ibhm;

namespace {

std::pair<double, double> parse_pair(const std::string& s, const char* what) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError(std::string(what) + " must look like A:B");
  try {
    std::size_t n1 = 0, n2 = 0;
    const double a = std::stod(s.substr(0, colon), &n1);
    const double b = std::stod(s.substr(colon + 1), &n2);
    if (n1 != colon || n2 != s.size() - colon - 1) throw std::invalid_argument("trailing");
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError(std::string("cannot parse ") + what + ": " + s);
  }
}

std::vector<BridgeSpec> select_bridges(const std::vector<std::string>& tokens) {
  const auto all = preset_bridges();
  if (tokens.empty()) return all;
  std::vector<BridgeSpec> out;
  for (std::string t : tokens) {
    if (!t.empty() && t[0] != 'B') t = "B" + t;
    bool found = false;
    for (const auto& b : all)
      if (b.id == t) {
        out.push_back(b);
        found = true;
      }
    if (!found) throw ConfigError("unknown bridge " + t);
  }
  return out;
}

std::vector<feature::Method> parse_methods(const std::vector<std::string>& tokens) {
  std::vector<feature::Method> out;
  for (const auto& t : tokens) {
    if (t == "all") {
      return {feature::Method::ours, feature::Method::bandpass1, feature::Method::icwt1, feature::Method::raw};
    }
    const auto m = feature::parse_method(t);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

void write_run_json(const fs::path& dir, const std::string& command, const nlohmann::json& config) {
  nlohmann::json j;
  j["tool"] = "ibhm";
  j["version"] = IBHM_VERSION;
  j["command"] = command;
  j["config"] = config;
  dataset::write_text(dir / "run.json", j.dump(2) + "\n");
}

auto progress_printer(const char* label) {
  return [label, last = -1](std::size_t done, std::size_t total) mutable {
    const int pct = static_cast<int>(100 * done / std::max<std::size_t>(total, 1));
    if (pct / 5 != last / 5 || done == total) {
      std::fprintf(stderr, "\r%s %zu/%zu (%d%%)", label, done, total, pct);
      if (done == total) std::fputc('\n', stderr);
      last = pct;
    }
  };
}

std::string abs_str(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

// Feature series for one scenario cell, read back with its manifest.
struct LoadedFeature {
  feature::FeatureSeries f;
  nlohmann::json manifest;
};

LoadedFeature load_cell(const fs::path& root, feature::Method m, const std::string& bridge, double R,
                        std::optional<double> loc, int trial) {
  dataset::RecordKey key{bridge, R, loc, trial};
  const fs::path base = root / feature::method_name(m) / key.rel_stem();
  const fs::path csv = base.string() + ".csv", js = base.string() + ".json";
  if (!fs::exists(csv)) throw ConfigError("no feature for " + key.rel_stem());
  LoadedFeature lf;
  lf.f = feature::read_feature_csv(csv.string());
  try {
    lf.manifest = nlohmann::json::parse(dataset::read_text(js));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed feature manifest " + js.string() + ": " + e.what());
  }
  lf.f.c51 = lf.manifest.value("c51", 1.0);
  return lf;
}

// Features of all bridges for one damage case; `denormalize` multiplies the
// C51 factor back in to show the feature before normalisation.
std::string overlay_bridges(const fs::path& root, feature::Method m, double R, double x, int trial, bool denormalize) {
  std::vector<plot::Series> series;
  for (const auto& b : preset_bridges()) {
    try {
      auto lf = load_cell(root, m, b.id, R, x, trial);
      plot::Series s{b.id, lf.f.pos, lf.f.y_d};
      if (denormalize)
        for (double& v : s.y) v *= lf.f.c51;
      series.push_back(std::move(s));
    } catch (const ConfigError&) {
    }
  }
  if (series.empty()) throw ConfigError("no bridge has features for the requested damage case");
  char title[160];
  std::snprintf(title, sizeof title, "%s, R_s = %.2f at x_s/L = %.3f%s", feature::method_name(m), R, x,
                denormalize ? " (before 1/C51)" : "");
  return plot::line_plot(series, {title, "x / L", denormalize ? "band content (m/s^2)" : "feature", 720, 420});
}

std::string overlay_levels(const fs::path& root, feature::Method m, const std::string& bridge, double x, int trial) {
  std::vector<plot::Series> series;
  const std::vector<double> levels{0.3, 0.4, 0.5, 0.6, 0.7};
  try {
    auto u = load_cell(root, m, bridge, levels.front(), std::nullopt, trial);
    series.push_back({"undamaged", u.f.pos, u.f.y_d});
  } catch (const ConfigError&) {
  }
  for (double R : levels) {
    try {
      auto lf = load_cell(root, m, bridge, R, x, trial);
      char label[32];
      std::snprintf(label, sizeof label, "R_s = %.0f%%", 100 * R);
      series.push_back({label, lf.f.pos, lf.f.y_d});
    } catch (const ConfigError&) {
    }
  }
  if (series.empty()) throw ConfigError("no features for bridge " + bridge);
  char title[160];
  std::snprintf(title, sizeof title, "%s, %s, damage at x_s/L = %.3f", feature::method_name(m), bridge.c_str(), x);
  return plot::line_plot(series, {title, "x / L", "feature", 720, 420});
}

int cmd_simulate(const std::string& preset, const fs::path& out, std::optional<std::uint64_t> seed, int jobs,
                 std::optional<double> dt, std::optional<double> noise, const std::vector<std::string>& bridges,
                 std::optional<int> trials, bool overwrite) {
  if (preset != "paper") throw ConfigError("unknown preset " + preset);
  dataset::DatasetConfig cfg;
  cfg.bridges = select_bridges(bridges);
  if (seed) cfg.seed = *seed;
  if (dt) cfg.dt = *dt;
  if (noise) cfg.noise_std = *noise;
  if (trials) cfg.trials = *trials;
  const auto planned = dataset::generate_dataset(cfg, out, jobs, overwrite, progress_printer("simulate"));

  nlohmann::json c;
  c["preset"] = preset;
  c["out"] = abs_str(out);
  c["seed"] = cfg.seed;
  c["dt"] = cfg.dt;
  c["noise_std"] = cfg.noise_std;
  c["trials"] = cfg.trials;
  c["bridges"] = nlohmann::json::array();
  for (const auto& b : cfg.bridges) c["bridges"].push_back(b.id);
  c["reductions"] = cfg.reductions;
  c["locations"] = cfg.locations;
  c["l_s"] = cfg.l_s;
  c["vehicle"] = {{"m_v", cfg.vehicle.m_v}, {"f_v", cfg.vehicle.f_v}, {"v", cfg.vehicle.v}, {"c_v", cfg.vehicle.c_v}};
  c["substeps"] = cfg.sim.substeps;
  c["target_elem_len"] = cfg.sim.target_elem_len;
  c["records"] = planned.size();
  write_run_json(out, "simulate", c);
  std::fprintf(stderr, "wrote %zu records to %s\n", planned.size(), out.string().c_str());
  return 0;
}

int cmd_extract(const fs::path& data, const fs::path& out, const std::vector<std::string>& methods,
                const std::string& band, double f_hi, std::size_t grid, int jobs, bool overwrite) {
  pipeline::ExtractConfig cfg;
  cfg.methods = parse_methods(methods);
  cfg.f_hi = f_hi;
  if (!band.empty()) {
    const auto [lo, hi] = parse_pair(band, "--band");
    cfg.band = tfr::Band{lo, hi};
    if (!(lo > 0.0 && hi > lo)) throw ConfigError("--band requires 0 < LO < HI");
  }
  cfg.grid_points = grid;
  cfg.jobs = jobs;
  cfg.overwrite = overwrite;
  const auto rep = pipeline::extract_dataset(data, out, cfg, progress_printer("extract"));
  for (const auto& f : rep.failures) std::fprintf(stderr, "failed: %s: %s\n", f.record.c_str(), f.error.c_str());

  nlohmann::json c;
  c["data"] = abs_str(data);
  c["out"] = abs_str(out);
  c["methods"] = nlohmann::json::array();
  for (auto m : cfg.methods) c["methods"].push_back(feature::method_name(m));
  c["band"] = cfg.band ? nlohmann::json({cfg.band->f_lo, cfg.band->f_hi}) : nlohmann::json("auto");
  c["f_hi"] = cfg.f_hi;
  c["grid_points"] = cfg.grid_points;
  c["voices_per_octave"] = cfg.options.voices_per_octave;
  c["gamma"] = cfg.options.gamma;
  c["edge_trim"] = cfg.options.edge_trim;
  c["records"] = rep.n_records;
  c["extracted"] = rep.n_ok;
  c["failed"] = rep.failures.size();
  write_run_json(out, "extract", c);
  std::fprintf(stderr, "extracted %zu of %zu records\n", rep.n_ok, rep.n_records);
  if (rep.n_ok == 0) throw DataError("no record could be extracted");
  return 0;
}

int cmd_evaluate(const fs::path& features, const fs::path& out, const std::string& split, double holdout,
                 std::uint64_t seed, const std::vector<std::string>& methods_in, bool overwrite) {
  auto methods = methods_in.empty() ? pipeline::available_methods(features) : parse_methods(methods_in);
  if (methods.empty()) throw ConfigError("no features found under " + features.string());
  std::vector<diagnose::SplitKind> splits;
  if (split == "all")
    splits = {diagnose::SplitKind::supervised, diagnose::SplitKind::diffL, diagnose::SplitKind::diffOmega};
  else
    splits = {diagnose::parse_split(split)};
  dataset::prepare_output_dir(out, overwrite);

  std::vector<diagnose::EvalRow> rows;
  std::string records = "method,split,key,bridge,R_true,x_true,x_hat,r_hat,confidence,detected\n";
  for (auto m : methods) {
    const auto samples = pipeline::load_samples(features, m);
    for (auto sk : splits) {
      std::vector<diagnose::RecordResult> rr;
      rows.push_back(diagnose::evaluate(samples, diagnose::SplitSpec::make(sk, holdout, seed), feature::method_name(m), &rr));
      const std::string part = diagnose::per_record_csv(rr, feature::method_name(m), diagnose::split_name(sk));
      records += part.substr(part.find('\n') + 1);
    }
  }
  dataset::write_text(out / "table.csv", diagnose::table_csv(rows));
  dataset::write_text(out / "records.csv", records);
  std::cout << diagnose::table_csv(rows);

  // Figures for the mid-span, 50% case when those records exist.
  nlohmann::json figs = nlohmann::json::array();
  auto try_fig = [&](const std::string& name, auto&& make) {
    try {
      dataset::write_text(out / name, make());
      figs.push_back(name);
    } catch (const ConfigError&) {
    }
  };
  if (std::find(methods.begin(), methods.end(), feature::Method::ours) != methods.end()) {
    try_fig("levels_B1.svg", [&] { return overlay_levels(features, feature::Method::ours, "B1", 0.5, 0); });
    try_fig("bridges_normalized.svg",
            [&] { return overlay_bridges(features, feature::Method::ours, 0.5, 0.5, 0, false); });
    try_fig("bridges_raw.svg", [&] { return overlay_bridges(features, feature::Method::ours, 0.5, 0.5, 0, true); });
  }

  nlohmann::json c;
  c["features"] = abs_str(features);
  c["out"] = abs_str(out);
  c["split"] = split;
  c["holdout"] = holdout;
  c["seed"] = seed;
  c["methods"] = nlohmann::json::array();
  for (auto m : methods) c["methods"].push_back(feature::method_name(m));
  c["smooth_width"] = diagnose::LocalizeOptions{}.smooth_width;
  c["detect_ratio"] = diagnose::LocalizeOptions{}.detect_ratio;
  c["figures"] = figs;
  write_run_json(out, "evaluate", c);
  return 0;
}

int cmd_plot(const fs::path& features, const std::string& overlay, const std::string& damage,
             const std::string& bridge, const std::string& method, int trial, bool raw, const std::string& heatmap,
             const std::string& kind, const fs::path& out) {
  std::string svg;
  if (!heatmap.empty()) {
    const SignalRecord rec = dataset::read_record(heatmap);
    const auto& sc = rec.scenario;
    const tfr::Band band{0.5 * sc.vehicle.v / (2.0 * sc.bridge.L), 10.0};
    const auto c = tfr::cwt(rec.a, sc.dt, band);
    const double t_end = rec.t.back();
    if (kind == "cwt") {
      svg = plot::heatmap(c.W, c.center_freqs, t_end, {"|W|", "t (s)", "f (Hz)", 720, 420}, 300);
    } else if (kind == "swt") {
      const auto s = tfr::synchrosqueeze(c, tfr::inst_freq(c));
      svg = plot::heatmap(s.T, s.freq_bins, t_end, {"|T|", "t (s)", "f (Hz)", 720, 420}, 300);
    } else {
      throw ConfigError("--kind must be cwt or swt");
    }
  } else {
    if (features.empty()) throw ConfigError("--features is required for overlays");
    const auto m = feature::parse_method(method);
    const auto [R, x] = parse_pair(damage, "--damage");
    if (overlay == "bridges")
      svg = overlay_bridges(features, m, R, x, trial, raw);
    else if (overlay == "levels")
      svg = overlay_levels(features, m, bridge, x, trial);
    else
      throw ConfigError("--overlay must be bridges or levels");
  }
  dataset::write_text(out, svg);
  std::fprintf(stderr, "wrote %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle-bridge simulation, damage feature extraction and evaluation"};
  app.set_version_flag("--version", IBHM_VERSION);
  app.require_subcommand(1);

  std::string preset = "paper";
  fs::path out, data, features;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::optional<double> dt, noise;
  std::vector<std::string> bridges;
  std::optional<int> trials;
  bool overwrite = false;

  auto* sim = app.add_subcommand("simulate", "Generate a dataset of vehicle acceleration records");
  sim->add_option("--preset", preset, "Scenario grid preset")->check(CLI::IsMember({"paper"}));
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--seed", seed, "Base seed");
  sim->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--dt", dt, "Output sample interval (s)")->check(CLI::PositiveNumber);
  sim->add_option("--noise-std", noise, "Per-node force noise std (N)")->check(CLI::NonNegativeNumber);
  sim->add_option("--bridges", bridges, "Bridges to include, e.g. 1,5 or B2")->delimiter(',');
  sim->add_option("--trials", trials, "Noise realisations per case")->check(CLI::PositiveNumber);
  sim->add_flag("--overwrite", overwrite, "Write into a non-empty output directory");

  std::vector<std::string> methods{"ours"};
  std::string band;
  double f_hi = 1.0;
  std::size_t grid = 1001;
  auto* ext = app.add_subcommand("extract", "Compute features for every record of a dataset");
  ext->add_option("--data", data, "Dataset directory")->required();
  ext->add_option("--out", out, "Feature output directory")->required();
  ext->add_option("--feature", methods, "ours, bandpass1, icwt1, raw or all")->delimiter(',');
  ext->add_option("--band", band, "Fixed band LO:HI in Hz instead of [f_d1, f_hi]");
  ext->add_option("--f-hi", f_hi, "Upper band edge (Hz)")->check(CLI::PositiveNumber);
  ext->add_option("--grid", grid, "Points of the stored x/L grid");
  ext->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  ext->add_flag("--overwrite", overwrite, "Write into a non-empty output directory");

  std::string split = "all";
  double holdout = 0.3;
  std::uint64_t eval_seed = 7;
  std::vector<std::string> eval_methods;
  auto* ev = app.add_subcommand("evaluate", "Localisation and quantification RMSE per method and split");
  ev->add_option("--features", features, "Feature directory")->required();
  ev->add_option("--out", out, "Output directory")->required();
  ev->add_option("--split", split, "supervised, diffL, diffOmega or all")
      ->check(CLI::IsMember({"supervised", "diffL", "diffOmega", "all"}));
  ev->add_option("--holdout", holdout, "Test fraction of the supervised split");
  ev->add_option("--seed", eval_seed, "Seed of the supervised holdout");
  ev->add_option("--feature", eval_methods, "Methods to evaluate (default: all present)")->delimiter(',');
  ev->add_flag("--overwrite", overwrite, "Write into a non-empty output directory");

  std::string overlay = "bridges", damage = "0.5:0.5", plot_bridge = "B1", plot_method = "ours", heatmap,
              kind = "swt";
  int trial = 0;
  bool raw = false;
  fs::path plot_out;
  auto* pl = app.add_subcommand("plot", "Feature overlays and time-frequency heatmaps as SVG");
  pl->add_option("--features", features, "Feature directory");
  pl->add_option("--overlay", overlay, "bridges or levels");
  pl->add_option("--damage", damage, "Damage case R:x (reduction fraction, x_s/L)");
  pl->add_option("--bridge", plot_bridge, "Bridge for the levels overlay");
  pl->add_option("--feature", plot_method, "Feature method");
  pl->add_option("--trial", trial, "Trial index");
  pl->add_flag("--raw", raw, "Undo the 1/C51 normalisation");
  pl->add_option("--heatmap", heatmap, "Record CSV to draw a time-frequency heatmap of");
  pl->add_option("--kind", kind, "cwt or swt (heatmap)");
  pl->add_option("--out", plot_out, "Output SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(preset, out, seed, jobs, dt, noise, bridges, trials, overwrite);
    if (ext->parsed()) return cmd_extract(data, out, methods, band, f_hi, grid, jobs, overwrite);
    if (ev->parsed()) return cmd_evaluate(features, out, split, holdout, eval_seed, eval_methods, overwrite);
    if (pl->parsed())
      return cmd_plot(features, overlay, damage, plot_bridge, plot_method, trial, raw, heatmap, kind, plot_out);
  } catch (const ibhm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
