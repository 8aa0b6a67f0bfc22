#pragma once
// Damage localisation and stiffness-reduction quantification from features,
// and the RMSE harness over supervised and cross-bridge splits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ibhm/errors.hpp"
#include "ibhm/feature.hpp"

namespace ibhm::diagnose {

using feature::FeatureSeries;

struct LocalizeOptions {
  double smooth_width = 0.02;  // moving-average width in x/L
  double detect_ratio = 2.0;   // peak-to-floor ratio below which no damage is reported
};

struct Localization {
  double x_hat = 0.5;
  double peak = 0.0;        // smoothed |feature - reference| at x_hat
  double confidence = 1.0;  // peak / median of the smoothed deviation
  bool detected = false;
};

struct DiagnosisResult {
  double x_hat = 0.5;
  double r_hat = 0.0;
  double confidence = 1.0;
  bool detected = false;
};

namespace detail {

inline void require_same_grid(const FeatureSeries& a, const FeatureSeries& b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("feature and reference differ in length");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a.pos[i] - b.pos[i]) > 1e-9) throw ValidationError("feature and reference grids differ");
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  double m = v[n / 2];
  if (n % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2)));
  return m;
}

}  // namespace detail

/// Centred moving average of |feature - reference| over the valid samples.
inline std::vector<double> smoothed_deviation(const FeatureSeries& f, const FeatureSeries& ref, double width) {
  detail::require_same_grid(f, ref);
  const std::size_t n = f.size();
  const double step = (f.pos.back() - f.pos.front()) / static_cast<double>(n - 1);
  const auto half = static_cast<std::size_t>(std::max(0.0, std::round(0.5 * width / step)));
  std::vector<double> csum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) csum[i + 1] = csum[i] + std::abs(f.y_d[i] - ref.y_d[i]);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0, hi = std::min(n, i + half + 1);
    out[i] = (csum[hi] - csum[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

inline Localization localize(const FeatureSeries& f, const FeatureSeries& ref, const LocalizeOptions& opt = {}) {
  const auto dev = smoothed_deviation(f, ref, opt.smooth_width);
  Localization loc;
  std::vector<double> valid;
  bool any = false;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.valid[i] || !ref.valid[i] || !std::isfinite(dev[i])) continue;
    valid.push_back(dev[i]);
    if (!any || dev[i] > loc.peak) {
      loc.peak = dev[i];
      loc.x_hat = f.pos[i];
      any = true;
    }
  }
  if (!any) throw NoEstimateError("no valid samples to localize on");
  const double floor = detail::median(std::move(valid));
  if (floor > 0.0)
    loc.confidence = loc.peak / floor;
  else
    loc.confidence = loc.peak > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  loc.detected = loc.confidence >= opt.detect_ratio;
  return loc;
}

/// The deviation produced by a short stiffness loss scales with x(1 - x)
/// along the span; dividing it out makes the statistic comparable between
/// locations. The weight is floored at the edge-trim positions.
inline double location_weight(double x, double edge = 0.05) {
  const double c = std::clamp(x, edge, 1.0 - edge);
  return 4.0 * c * (1.0 - c);
}

inline double damage_statistic(const Localization& l) { return l.peak / location_weight(l.x_hat); }

/// Isotonic map from damage statistic to stiffness reduction.
struct Calibration {
  std::vector<std::pair<double, double>> knots;  // (statistic, R_s), both non-decreasing
  std::vector<std::string> bridge_ids;

  double operator()(double s) const {
    if (knots.empty()) throw CalibrationError("empty calibration");
    double r;
    if (s <= knots.front().first) {
      r = knots.front().second;
    } else if (s >= knots.back().first) {
      r = knots.back().second;
    } else {
      auto it = std::upper_bound(knots.begin(), knots.end(), s,
                                 [](double v, const std::pair<double, double>& k) { return v < k.first; });
      const auto& [x1, y1] = *it;
      const auto& [x0, y0] = *(it - 1);
      r = x1 > x0 ? y0 + (y1 - y0) * (s - x0) / (x1 - x0) : y1;
    }
    return std::clamp(r, 0.0, std::nextafter(1.0, 0.0));
  }
};

/// Pool-adjacent-violators fit of R_s against the statistic. Equal
/// neighbouring blocks are merged too, so knots increase strictly; an
/// origin knot (0, 0) anchors the undamaged end.
inline Calibration calibrate(std::span<const std::pair<double, double>> points, std::vector<std::string> bridge_ids = {}) {
  std::vector<std::pair<double, double>> pts(points.begin(), points.end());
  for (const auto& [s, r] : pts)
    if (!std::isfinite(s) || !std::isfinite(r)) throw CalibrationError("non-finite calibration point");
  std::vector<double> levels;
  for (const auto& p : pts) levels.push_back(p.second);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.size() < 2) throw CalibrationError("calibration needs at least two distinct R_s levels");

  std::sort(pts.begin(), pts.end());
  struct Block {
    double sum_s, sum_r;
    std::size_t n;
    double r() const { return sum_r / static_cast<double>(n); }
    double s() const { return sum_s / static_cast<double>(n); }
  };
  std::vector<Block> blocks;
  for (const auto& [s, r] : pts) {
    blocks.push_back({s, r, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].r() >= blocks.back().r()) {
      Block b = blocks.back();
      blocks.pop_back();
      blocks.back().sum_s += b.sum_s;
      blocks.back().sum_r += b.sum_r;
      blocks.back().n += b.n;
    }
  }
  Calibration cal;
  cal.bridge_ids = std::move(bridge_ids);
  if (blocks.front().s() > 0.0 && blocks.front().r() > 0.0) cal.knots.emplace_back(0.0, 0.0);
  for (const auto& b : blocks) cal.knots.emplace_back(b.s(), b.r());
  return cal;
}

inline double quantify(const FeatureSeries& f, const FeatureSeries& ref, const Calibration& cal,
                       const LocalizeOptions& opt = {}) {
  return cal(damage_statistic(localize(f, ref, opt)));
}

inline DiagnosisResult diagnose(const FeatureSeries& f, const FeatureSeries& ref, const Calibration& cal,
                                const LocalizeOptions& opt = {}) {
  const auto loc = localize(f, ref, opt);
  return {loc.x_hat, cal(damage_statistic(loc)), loc.confidence, loc.detected};
}

/// Pointwise mean of features on a shared grid; validity is the conjunction.
inline FeatureSeries mean_feature(std::span<const FeatureSeries* const> fs) {
  if (fs.empty()) throw ConfigError("no features to average");
  FeatureSeries m = *fs.front();
  for (std::size_t k = 1; k < fs.size(); ++k) {
    detail::require_same_grid(m, *fs[k]);
    for (std::size_t i = 0; i < m.size(); ++i) {
      m.y_d[i] += fs[k]->y_d[i];
      m.valid[i] = m.valid[i] && fs[k]->valid[i];
    }
  }
  for (double& v : m.y_d) v /= static_cast<double>(fs.size());
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation harness

struct Sample {
  std::string key;  // unique, used for ordering
  std::string bridge_id;
  double R_true = 0.0;
  std::optional<double> x_true;  // x_s / L
  FeatureSeries feature;          // on the common grid
};

enum class SplitKind { supervised, diffL, diffOmega };

inline const char* split_name(SplitKind k) {
  switch (k) {
    case SplitKind::supervised: return "supervised";
    case SplitKind::diffL: return "diffL";
    case SplitKind::diffOmega: return "diffOmega";
  }
  return "?";
}

inline SplitKind parse_split(const std::string& s) {
  if (s == "supervised") return SplitKind::supervised;
  if (s == "diffL") return SplitKind::diffL;
  if (s == "diffOmega") return SplitKind::diffOmega;
  throw ConfigError("unknown split: " + s);
}

struct SplitSpec {
  SplitKind kind = SplitKind::supervised;
  double holdout = 0.3;
  std::uint64_t seed = 7;
  std::vector<std::string> train_bridges;  // cross-bridge splits
  std::vector<std::string> test_bridges;

  /// Different span: train on the three 25 m bridges, test on 20 m and 30 m.
  /// Different frequency: train on the c = 2.5 Hz bridges, test on 2 and 3 Hz.
  static SplitSpec make(SplitKind k, double holdout = 0.3, std::uint64_t seed = 7) {
    SplitSpec s{k, holdout, seed, {}, {}};
    if (k == SplitKind::diffL) {
      s.train_bridges = {"B1", "B2", "B3"};
      s.test_bridges = {"B4", "B5"};
    } else if (k == SplitKind::diffOmega) {
      s.train_bridges = {"B2", "B4", "B5"};
      s.test_bridges = {"B1", "B3"};
    }
    return s;
  }
};

struct Split {
  std::vector<std::size_t> train, test;
};

/// Indices into `samples`. The supervised holdout is drawn after ordering by
/// key, so it does not depend on input order.
inline Split make_split(std::span<const Sample> samples, const SplitSpec& spec) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return samples[a].key < samples[b].key; });
  Split sp;
  if (spec.kind == SplitKind::supervised) {
    if (!(spec.holdout > 0.0 && spec.holdout < 1.0)) throw ConfigError("holdout must lie in (0, 1)");
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    const auto n_test = static_cast<std::size_t>(std::llround(spec.holdout * static_cast<double>(order.size())));
    sp.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    sp.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  } else {
    auto in = [](const std::vector<std::string>& v, const std::string& id) {
      return std::find(v.begin(), v.end(), id) != v.end();
    };
    for (std::size_t i : order) {
      if (in(spec.train_bridges, samples[i].bridge_id)) sp.train.push_back(i);
      else if (in(spec.test_bridges, samples[i].bridge_id)) sp.test.push_back(i);
    }
  }
  std::sort(sp.train.begin(), sp.train.end(), [&](std::size_t a, std::size_t b) { return samples[a].key < samples[b].key; });
  std::sort(sp.test.begin(), sp.test.end(), [&](std::size_t a, std::size_t b) { return samples[a].key < samples[b].key; });
  if (sp.train.empty() || sp.test.empty()) throw ConfigError(std::string("empty split: ") + split_name(spec.kind));
  return sp;
}

struct RecordResult {
  std::string key;
  std::string bridge_id;
  double R_true = 0.0;
  std::optional<double> x_true;
  DiagnosisResult result;
};

struct EvalRow {
  std::string method;
  std::string split;
  double DLE = 0.0;  // RMSE of x_hat - x_s/L over damaged test records
  double SRE = 0.0;  // RMSE of r_hat - R_s over all test records
  std::size_t n_records = 0;
};

/// Calibrates on the training part of `samples` and scores the test part.
/// Supervised: each record is compared with the mean undamaged training
/// feature of its own bridge. Cross-bridge: all records are compared with
/// the mean undamaged feature pooled over the training bridges.
inline EvalRow evaluate(std::span<const Sample> samples, const SplitSpec& spec, const std::string& method,
                        std::vector<RecordResult>* per_record = nullptr, const LocalizeOptions& opt = {}) {
  const Split sp = make_split(samples, spec);

  std::map<std::string, std::vector<const FeatureSeries*>> und_by_bridge;
  std::vector<const FeatureSeries*> und_all;
  std::vector<std::string> train_ids;
  for (std::size_t i : sp.train) {
    const auto& s = samples[i];
    if (std::find(train_ids.begin(), train_ids.end(), s.bridge_id) == train_ids.end()) train_ids.push_back(s.bridge_id);
    if (s.R_true == 0.0) {
      und_by_bridge[s.bridge_id].push_back(&s.feature);
      und_all.push_back(&s.feature);
    }
  }
  if (und_all.empty()) throw ConfigError("training split has no undamaged records");
  const FeatureSeries pooled = mean_feature(und_all);
  std::map<std::string, FeatureSeries> per_bridge;
  for (const auto& [id, v] : und_by_bridge) per_bridge.emplace(id, mean_feature(v));
  auto reference = [&](const Sample& s) -> const FeatureSeries& {
    if (spec.kind == SplitKind::supervised) {
      if (auto it = per_bridge.find(s.bridge_id); it != per_bridge.end()) return it->second;
    }
    return pooled;
  };

  std::vector<std::pair<double, double>> pts;
  for (std::size_t i : sp.train) {
    const auto& s = samples[i];
    pts.emplace_back(damage_statistic(localize(s.feature, reference(s), opt)), s.R_true);
  }
  std::sort(train_ids.begin(), train_ids.end());
  const Calibration cal = calibrate(pts, train_ids);

  EvalRow row;
  row.method = method;
  row.split = split_name(spec.kind);
  double se_x = 0.0, se_r = 0.0;
  std::size_t n_x = 0;
  for (std::size_t i : sp.test) {
    const auto& s = samples[i];
    const DiagnosisResult d = diagnose(s.feature, reference(s), cal, opt);
    se_r += (d.r_hat - s.R_true) * (d.r_hat - s.R_true);
    if (s.x_true && s.R_true > 0.0) {
      se_x += (d.x_hat - *s.x_true) * (d.x_hat - *s.x_true);
      ++n_x;
    }
    if (per_record) per_record->push_back({s.key, s.bridge_id, s.R_true, s.x_true, d});
  }
  row.n_records = sp.test.size();
  row.SRE = std::sqrt(se_r / static_cast<double>(sp.test.size()));
  row.DLE = n_x ? std::sqrt(se_x / static_cast<double>(n_x)) : std::nan("");
  return row;
}

inline std::string table_csv(std::span<const EvalRow> rows) {
  std::string out = "method,split,DLE,SRE,n_records\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,", r.DLE, r.SRE);
    out += r.method + "," + r.split + "," + buf + std::to_string(r.n_records) + "\n";
  }
  return out;
}

inline std::string per_record_csv(std::span<const RecordResult> rs, const std::string& method, const std::string& split) {
  std::string out = "method,split,key,bridge,R_true,x_true,x_hat,r_hat,confidence,detected\n";
  char buf[160];
  for (const auto& r : rs) {
    std::snprintf(buf, sizeof buf, "%.4f,%s,%.6f,%.6f,%.6g,%d", r.R_true,
                  r.x_true ? std::to_string(*r.x_true).c_str() : "", r.result.x_hat, r.result.r_hat,
                  r.result.confidence, r.result.detected ? 1 : 0);
    out += method + "," + split + "," + r.key + "," + r.bridge_id + "," + buf + "\n";
  }
  return out;
}

}  // namespace ibhm::diagnose
