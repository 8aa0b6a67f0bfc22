#pragma once
// Scenario grids, deterministic seeding and the on-disk record layout
//   <root>/<bridge_id>/<Rs>/<loc>/<trial>.csv   (header t,a)
//   <root>/<bridge_id>/<Rs>/<loc>/<trial>.json  (scenario manifest)
// with <loc> either x_s/L to three decimals or "undamaged".

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ibhm/errors.hpp"
#include "ibhm/fem.hpp"
#include "ibhm/model.hpp"

namespace ibhm::dataset {

namespace fs = std::filesystem;

struct DatasetConfig {
  std::vector<BridgeSpec> bridges = preset_bridges();
  std::vector<double> reductions{0.7, 0.6, 0.5, 0.4, 0.3};
  std::vector<double> locations{1.0 / 8, 2.0 / 8, 3.0 / 8, 4.0 / 8, 5.0 / 8, 6.0 / 8, 7.0 / 8};  // x_s / L
  bool include_undamaged = true;  // one undamaged case per reduction level
  int trials = 10;
  VehicleSpec vehicle = preset_vehicle();
  double l_s = 0.6;
  double noise_std = std::sqrt(0.1);
  double dt = 1e-3;
  std::uint64_t seed = 20240601;
  fem::SimConfig sim{};

  void validate() const {
    if (bridges.empty()) throw ConfigError("dataset needs at least one bridge");
    if (reductions.empty()) throw ConfigError("dataset needs at least one reduction level");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    for (double r : reductions)
      if (!(r > 0.0 && r < 1.0)) throw ConfigError("reduction levels must lie in (0, 1)");
    for (double x : locations)
      if (!(x > 0.0 && x < 1.0)) throw ConfigError("damage locations must lie in (0, 1)");
    if (locations.empty() && !include_undamaged) throw ConfigError("no cases per reduction level");
    vehicle.validate();
  }
};

/// One cell of the scenario grid. `group_R` is the reduction level the case
/// is filed under; undamaged cases carry R_s = 0 in their scenario.
struct RecordKey {
  std::string bridge_id;
  double group_R = 0.0;
  std::optional<double> loc;  // x_s / L
  int trial = 0;

  std::string rs_dir() const { return fixed(group_R, 2); }
  std::string loc_dir() const { return loc ? fixed(*loc, 3) : std::string("undamaged"); }
  std::string rel_stem() const {
    return bridge_id + "/" + rs_dir() + "/" + loc_dir() + "/" + std::to_string(trial);
  }

  static std::string fixed(double v, int digits) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    return std::string(buf, r.ptr);
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed derived from (base seed, bridge, reduction level, location, trial);
/// independent of enumeration order and of the other grid entries.
inline std::uint64_t record_seed(std::uint64_t base, const RecordKey& k) {
  std::uint64_t h = splitmix64(base);
  for (unsigned char c : k.bridge_id) h = splitmix64(h ^ c);
  h = splitmix64(h ^ static_cast<std::uint64_t>(std::llround(k.group_R * 1000.0)));
  h = splitmix64(h ^ (k.loc ? static_cast<std::uint64_t>(std::llround(*k.loc * 1e6)) + 1 : 0));
  h = splitmix64(h ^ static_cast<std::uint64_t>(k.trial));
  return h;
}

struct PlannedRecord {
  RecordKey key;
  ScenarioSpec scenario;
};

inline std::vector<PlannedRecord> plan(const DatasetConfig& cfg) {
  cfg.validate();
  std::vector<PlannedRecord> out;
  for (const auto& b : cfg.bridges) {
    b.validate();
    for (double R : cfg.reductions) {
      std::vector<std::optional<double>> locs(cfg.locations.begin(), cfg.locations.end());
      if (cfg.include_undamaged) locs.push_back(std::nullopt);
      for (const auto& loc : locs) {
        for (int trial = 0; trial < cfg.trials; ++trial) {
          PlannedRecord p;
          p.key = {b.id, R, loc, trial};
          auto& sc = p.scenario;
          sc.bridge = b;
          sc.vehicle = cfg.vehicle;
          sc.damage = loc ? DamageSpec::at(*loc * b.L, cfg.l_s, R) : DamageSpec::none(cfg.l_s);
          sc.noise_std = cfg.noise_std;
          sc.dt = cfg.dt;
          sc.trial = trial;
          sc.seed = record_seed(cfg.seed, p.key);
          sc.validate();
          out.push_back(std::move(p));
        }
      }
    }
  }
  return out;
}

inline std::string record_csv(const SignalRecord& r) {
  std::string out = "t,a\n";
  out.reserve(r.t.size() * 48);
  char buf[32];
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    auto p = std::to_chars(buf, buf + sizeof buf, r.t[i], std::chars_format::general, 17);
    out.append(buf, p.ptr);
    out += ',';
    p = std::to_chars(buf, buf + sizeof buf, r.a[i], std::chars_format::general, 17);
    out.append(buf, p.ptr);
    out += '\n';
  }
  return out;
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::error_code ec;
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw DataError("cannot create " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot write " + p.string());
  os << text;
  if (!os) throw DataError("write failed: " + p.string());
}

inline std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_record(const fs::path& root, const RecordKey& key, const SignalRecord& r) {
  const fs::path stem = root / key.rel_stem();
  write_text(fs::path(stem.string() + ".csv"), record_csv(r));
  write_text(fs::path(stem.string() + ".json"), to_json(r.scenario).dump(2) + "\n");
}

inline SignalRecord read_record(const fs::path& csv_path) {
  fs::path json_path = csv_path;
  json_path.replace_extension(".json");
  SignalRecord r;
  try {
    r.scenario = scenario_from_json(nlohmann::json::parse(read_text(json_path)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest " + json_path.string() + ": " + e.what());
  }
  const std::string text = read_text(csv_path);
  std::size_t pos = text.find('\n');
  if (pos == std::string::npos || text.compare(0, 3, "t,a") != 0) throw DataError("bad header in " + csv_path.string());
  ++pos;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      const auto comma = line.find(',');
      double t = 0.0, a = 0.0;
      if (comma == std::string_view::npos) throw DataError("malformed row in " + csv_path.string());
      auto r1 = std::from_chars(line.data(), line.data() + comma, t);
      auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), a);
      if (r1.ec != std::errc{} || r2.ec != std::errc{} || r2.ptr != line.data() + line.size())
        throw DataError("malformed row in " + csv_path.string());
      r.t.push_back(t);
      r.a.push_back(a);
    }
    pos = end + 1;
  }
  if (r.t.empty()) throw DataError("empty record " + csv_path.string());
  return r;
}

/// Refuses a non-empty existing directory unless `overwrite` is set.
inline void prepare_output_dir(const fs::path& root, bool overwrite) {
  std::error_code ec;
  if (fs::exists(root, ec)) {
    if (!fs::is_directory(root, ec)) throw ConfigError(root.string() + " exists and is not a directory");
    if (!fs::is_empty(root, ec) && !overwrite)
      throw ConfigError(root.string() + " is not empty; pass the overwrite flag to replace it");
  }
  fs::create_directories(root, ec);
  if (ec) throw DataError("cannot create " + root.string() + ": " + ec.message());
}

/// Runs fn(i) for i in [0, n) on `jobs` threads. The first exception is
/// rethrown after all workers stop.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      while (!failed) {
        const std::size_t i = next++;
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!err) err = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline nlohmann::json index_entry(const PlannedRecord& p) {
  nlohmann::json e;
  e["path"] = p.key.rel_stem() + ".csv";
  e["bridge"] = p.key.bridge_id;
  e["group_R"] = p.key.group_R;
  e["loc"] = p.key.loc ? nlohmann::json(*p.key.loc) : nlohmann::json(nullptr);
  e["trial"] = p.key.trial;
  e["seed"] = p.scenario.seed;
  return e;
}

/// Simulates every planned record and writes it under `root` together with
/// index.json. Progress callback receives (done, total).
inline std::vector<PlannedRecord> generate_dataset(const DatasetConfig& cfg, const fs::path& root, int jobs = 1,
                                                   bool overwrite = false,
                                                   const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  auto planned = plan(cfg);
  prepare_output_dir(root, overwrite);
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;
  parallel_for(planned.size(), jobs, [&](std::size_t i) {
    const auto rec = fem::simulate_vbi(planned[i].scenario, cfg.sim);
    write_record(root, planned[i].key, rec);
    const std::size_t d = ++done;
    if (progress) {
      std::lock_guard lock(progress_mu);
      progress(d, planned.size());
    }
  });
  nlohmann::json idx = nlohmann::json::array();
  for (const auto& p : planned) idx.push_back(index_entry(p));
  write_text(root / "index.json", idx.dump(1) + "\n");
  return planned;
}

struct IndexedRecord {
  RecordKey key;
  fs::path csv;
};

inline std::vector<IndexedRecord> read_index(const fs::path& root) {
  const fs::path p = root / "index.json";
  if (!fs::exists(p)) throw DataError("no index.json under " + root.string());
  std::vector<IndexedRecord> out;
  try {
    const auto j = nlohmann::json::parse(read_text(p));
    for (const auto& e : j) {
      IndexedRecord r;
      r.key.bridge_id = e.at("bridge").get<std::string>();
      r.key.group_R = e.at("group_R").get<double>();
      if (!e.at("loc").is_null()) r.key.loc = e.at("loc").get<double>();
      r.key.trial = e.at("trial").get<int>();
      r.csv = root / e.at("path").get<std::string>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed index.json: ") + e.what());
  }
  return out;
}

}  // namespace ibhm::dataset
