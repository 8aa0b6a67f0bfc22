#pragma once
// Record -> damage feature: spectral identification of the vehicle and first
// bridge frequencies, band selection, synchrosqueezed band reconstruction and
// normalisation by C51. Also the comparison features used as baselines.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibhm/analytic.hpp"
#include "ibhm/errors.hpp"
#include "ibhm/fft.hpp"
#include "ibhm/model.hpp"
#include "ibhm/tfr.hpp"

namespace ibhm::feature {

struct IdentifiedSystem {
  double f_v_hat = 0.0;       // Hz
  double f1_hat = 0.0;        // Hz
  double k1_tilde_hat = 0.0;  // N/m
  double f_d1 = 0.0;          // v / (2L), Hz
};

struct FeatureSeries {
  std::vector<double> pos;  // x / L
  std::vector<double> y_d;
  std::vector<std::uint8_t> valid;
  double c51 = 1.0;
  tfr::Band band;

  std::size_t size() const { return pos.size(); }
};

struct Spectrum {
  std::vector<double> freq;  // Hz
  std::vector<double> amp;
};

/// One-sided amplitude spectrum of the mean-removed, Hann-windowed signal,
/// zero-padded to at least `min_fft` points.
inline Spectrum amplitude_spectrum(std::span<const double> x, double dt, std::size_t min_fft = 1u << 18) {
  const std::size_t N = x.size();
  if (N < 2) throw DataError("record too short for a spectrum");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(N);
  std::size_t nfft = 1;
  while (nfft < std::max(min_fft, N)) nfft <<= 1;
  fft::cvec buf(nfft, 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(N - 1));
    buf[i] = (x[i] - mean) * w;
    wsum += w;
  }
  const fft::cvec X = fft::forward(buf);
  Spectrum s;
  const std::size_t half = nfft / 2 + 1;
  s.freq.resize(half);
  s.amp.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    s.freq[k] = static_cast<double>(k) / (static_cast<double>(nfft) * dt);
    s.amp[k] = 2.0 * std::abs(X[k]) / wsum;
  }
  return s;
}

struct Peak {
  double freq = 0.0;
  double amp = 0.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// Local maxima with parabolic refinement, restricted to (lo, hi), and the
// median amplitude of that window.
inline std::vector<Peak> peaks_in(const Spectrum& s, double lo, double hi, double& floor) {
  std::vector<double> window;
  std::vector<Peak> out;
  for (std::size_t k = 1; k + 1 < s.freq.size(); ++k) {
    if (s.freq[k] <= lo || s.freq[k] >= hi) continue;
    window.push_back(s.amp[k]);
    const double a = s.amp[k - 1], b = s.amp[k], c = s.amp[k + 1];
    if (!(b > a && b >= c)) continue;
    const double den = a - 2.0 * b + c;
    const double d = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
    const double df = s.freq[1] - s.freq[0];
    out.push_back({s.freq[k] + d * df, b - 0.25 * (a - c) * d});
  }
  floor = median(std::move(window));
  return out;
}

}  // namespace detail

/// Vehicle and first bridge frequency from the record's spectrum, with
/// k~1 = (2 pi f1)^2 rhoA L / 2 from the known mass per length.
///
/// The vehicle line is usually far weaker than the second bridge mode's
/// sidebands at f~2 +- f_d2, which can fall inside the +-30% search window,
/// so the significant peak nearest the nominal f_v is taken rather than the
/// highest one.
inline IdentifiedSystem identify_system(const SignalRecord& rec, double significance = 3.0) {
  const auto& sc = rec.scenario;
  const auto& br = sc.bridge;
  const auto& vh = sc.vehicle;
  if (rec.a.size() < 2 || rec.a.size() != rec.t.size()) throw DataError("record has no samples");
  const double T = static_cast<double>(rec.a.size() - 1) * sc.dt;
  if (T < 4.0 / br.f1) throw DataError("record shorter than four bridge periods");

  IdentifiedSystem id;
  id.f_d1 = vh.v / (2.0 * br.L);
  const Spectrum s = amplitude_spectrum(rec.a, sc.dt);

  double floor_v = 0.0;
  const auto pv = detail::peaks_in(s, 0.7 * vh.f_v, 1.3 * vh.f_v, floor_v);
  const Peak* best_v = nullptr;
  for (const auto& p : pv) {
    if (!(p.amp > significance * floor_v)) continue;
    if (!best_v || std::abs(p.freq - vh.f_v) < std::abs(best_v->freq - vh.f_v)) best_v = &p;
  }
  if (!best_v) throw IdentificationError("no significant vehicle peak near the nominal f_v");
  id.f_v_hat = best_v->freq;

  double floor_b = 0.0;
  const auto pb = detail::peaks_in(s, 4.0 * id.f_d1, 0.8 * id.f_v_hat, floor_b);
  const Peak* best_b = nullptr;
  for (const auto& p : pb) {
    if (std::abs(p.freq - id.f_v_hat) < 0.1 * id.f_v_hat) continue;
    if (!best_b || p.amp > best_b->amp) best_b = &p;
  }
  if (!best_b || !(best_b->amp > significance * floor_b))
    throw IdentificationError("no significant bridge peak below the vehicle frequency");
  id.f1_hat = best_b->freq;
  const double w1 = 2.0 * std::numbers::pi * id.f1_hat;
  id.k1_tilde_hat = w1 * w1 * 0.5 * br.rhoA * br.L;
  return id;
}

/// [f_d1, f_hi], checked to stay clear of the vehicle line and the first
/// bridge mode's sidebands f1 +- f_d1.
inline tfr::Band select_band(const IdentifiedSystem& sys, double f_hi = 1.0) {
  if (!(f_hi > sys.f_d1)) throw ValidationError("band upper edge must exceed f_d1");
  tfr::Band b{sys.f_d1, f_hi};
  if (sys.f_v_hat > 0.0 && b.contains(sys.f_v_hat)) throw BandConflictError("band contains the vehicle frequency");
  if (sys.f1_hat > 0.0 && sys.f1_hat - sys.f_d1 <= f_hi)
    throw BandConflictError("band overlaps the first bridge mode");
  return b;
}

struct ExtractOptions {
  int voices_per_octave = 32;
  double gamma = 1e-8;
  double edge_trim = 0.05;  // fraction of pos invalidated at each end
};

namespace detail {

inline FeatureSeries frame(const SignalRecord& rec, std::vector<double> y, double c51, const tfr::Band& band,
                           double trim) {
  FeatureSeries f;
  const double v = rec.scenario.vehicle.v, L = rec.scenario.bridge.L;
  f.pos.reserve(rec.t.size());
  f.valid.reserve(rec.t.size());
  for (double t : rec.t) {
    const double p = std::clamp(v * t / L, 0.0, 1.0);
    f.pos.push_back(p);
    f.valid.push_back(p >= trim && p <= 1.0 - trim ? 1 : 0);
  }
  for (double& val : y) val /= c51;
  f.y_d = std::move(y);
  f.c51 = c51;
  f.band = band;
  return f;
}

inline tfr::Band analysis_range(const tfr::Band& band, double dt) {
  return {0.5 * band.f_lo, std::min(4.0 * band.f_hi, 0.4 / dt)};
}

}  // namespace detail

/// C51 from the identified first mode and the known vehicle.
inline double identified_c51(const SignalRecord& rec, const IdentifiedSystem& sys) {
  const auto& vh = rec.scenario.vehicle;
  return analytic::c51_value(2.0 * std::numbers::pi * sys.f1_hat, sys.k1_tilde_hat, vh.omega(), vh.m_v,
                             2.0 * std::numbers::pi * sys.f_d1);
}

/// CWT -> instantaneous frequency -> synchrosqueezing -> band inversion,
/// divided by C51.
inline FeatureSeries extract_feature(const SignalRecord& rec, const IdentifiedSystem& sys, const tfr::Band& band,
                                     const ExtractOptions& opt = {}) {
  const double dt = rec.scenario.dt;
  band.validate(0.5 / dt);
  const auto c = tfr::cwt(rec.a, dt, detail::analysis_range(band, dt), {opt.voices_per_octave, {}});
  const auto s = tfr::synchrosqueeze(c, tfr::inst_freq(c, opt.gamma));
  return detail::frame(rec, tfr::iswt_band(s, band), identified_c51(rec, sys), band, opt.edge_trim);
}

enum class Method { ours, bandpass1, icwt1, raw };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::ours: return "ours";
    case Method::bandpass1: return "bandpass-band1";
    case Method::icwt1: return "icwt-band1";
    case Method::raw: return "raw";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "ours") return Method::ours;
  if (s == "bandpass1" || s == "bandpass-band1") return Method::bandpass1;
  if (s == "icwt1" || s == "icwt-band1") return Method::icwt1;
  if (s == "raw" || s == "raw-peak") return Method::raw;
  throw ConfigError("unknown feature method: " + s);
}

/// Baseline features share the band and the position axis but are not
/// divided by C51.
inline FeatureSeries extract_baseline(const SignalRecord& rec, Method m, const tfr::Band& band,
                                      const ExtractOptions& opt = {}) {
  const double dt = rec.scenario.dt;
  switch (m) {
    case Method::bandpass1:
      return detail::frame(rec, tfr::bandpass(rec.a, dt, band), 1.0, band, opt.edge_trim);
    case Method::icwt1: {
      band.validate(0.5 / dt);
      const auto c = tfr::cwt(rec.a, dt, detail::analysis_range(band, dt), {opt.voices_per_octave, {}});
      return detail::frame(rec, tfr::icwt_band(c, band), 1.0, band, opt.edge_trim);
    }
    case Method::raw:
      return detail::frame(rec, rec.a, 1.0, band, opt.edge_trim);
    case Method::ours:
      break;
  }
  throw ConfigError("extract_baseline called with the proposed method");
}

/// Full per-record pipeline for any method. `f_hi` sets the upper band edge;
/// a band override skips band selection.
inline FeatureSeries extract(const SignalRecord& rec, Method m, double f_hi = 1.0,
                             const std::optional<tfr::Band>& override_band = std::nullopt,
                             const ExtractOptions& opt = {}) {
  if (m == Method::ours) {
    const IdentifiedSystem sys = identify_system(rec);
    const tfr::Band band = override_band ? *override_band : select_band(sys, f_hi);
    return extract_feature(rec, sys, band, opt);
  }
  const double f_d1 = rec.scenario.vehicle.v / (2.0 * rec.scenario.bridge.L);
  const tfr::Band band = override_band ? *override_band : tfr::Band{f_d1, f_hi};
  return extract_baseline(rec, m, band, opt);
}

struct MultiFeature {
  std::optional<IdentifiedSystem> sys;
  std::vector<std::pair<Method, FeatureSeries>> features;
};

/// Several methods on one record, sharing the CWT between the proposed
/// feature and the inverse-CWT baseline.
inline MultiFeature extract_all(const SignalRecord& rec, std::span<const Method> methods, double f_hi = 1.0,
                                const std::optional<tfr::Band>& override_band = std::nullopt,
                                const ExtractOptions& opt = {}) {
  MultiFeature out;
  const double dt = rec.scenario.dt;
  const double f_d1 = rec.scenario.vehicle.v / (2.0 * rec.scenario.bridge.L);
  const bool want_ours = std::find(methods.begin(), methods.end(), Method::ours) != methods.end();
  const bool want_icwt = std::find(methods.begin(), methods.end(), Method::icwt1) != methods.end();
  tfr::Band band = override_band ? *override_band : tfr::Band{f_d1, f_hi};
  if (want_ours) {
    out.sys = identify_system(rec);
    if (!override_band) band = select_band(*out.sys, f_hi);
  }
  band.validate(0.5 / dt);
  std::optional<tfr::CwtResult> c;
  if (want_ours || want_icwt)
    c = tfr::cwt(rec.a, dt, detail::analysis_range(band, dt), {opt.voices_per_octave, {}});
  for (Method m : methods) {
    switch (m) {
      case Method::ours: {
        const auto s = tfr::synchrosqueeze(*c, tfr::inst_freq(*c, opt.gamma));
        out.features.emplace_back(
            m, detail::frame(rec, tfr::iswt_band(s, band), identified_c51(rec, *out.sys), band, opt.edge_trim));
        break;
      }
      case Method::icwt1:
        out.features.emplace_back(m, detail::frame(rec, tfr::icwt_band(*c, band), 1.0, band, opt.edge_trim));
        break;
      default:
        out.features.emplace_back(m, extract_baseline(rec, m, band, opt));
    }
  }
  return out;
}

/// Linear interpolation of `f` onto an increasing position grid; validity is
/// taken from the nearer source sample.
inline FeatureSeries resample(const FeatureSeries& f, std::span<const double> grid) {
  if (f.pos.size() < 2) throw DataError("feature too short to resample");
  FeatureSeries out;
  out.c51 = f.c51;
  out.band = f.band;
  out.pos.assign(grid.begin(), grid.end());
  out.y_d.reserve(grid.size());
  out.valid.reserve(grid.size());
  for (double p : grid) {
    auto it = std::upper_bound(f.pos.begin(), f.pos.end(), p);
    std::size_t i = it == f.pos.begin() ? 0 : static_cast<std::size_t>(it - f.pos.begin()) - 1;
    i = std::min(i, f.pos.size() - 2);
    const double span = f.pos[i + 1] - f.pos[i];
    const double w = span > 0.0 ? std::clamp((p - f.pos[i]) / span, 0.0, 1.0) : 0.0;
    out.y_d.push_back((1.0 - w) * f.y_d[i] + w * f.y_d[i + 1]);
    const bool in = p >= f.pos.front() && p <= f.pos.back();
    out.valid.push_back(in && f.valid[w < 0.5 ? i : i + 1] ? 1 : 0);
  }
  return out;
}

inline std::vector<double> uniform_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

namespace detail {

inline void put(std::string& out, double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, r.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw DataError("bad number in " + where);
  return v;
}

}  // namespace detail

inline void write_feature_csv(const std::string& path, const FeatureSeries& f) {
  std::string out = "pos,y_d,valid\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    detail::put(out, f.pos[i]);
    out += ',';
    detail::put(out, f.y_d[i]);
    out += f.valid[i] ? ",1\n" : ",0\n";
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  os << out;
  if (!os) throw DataError("write failed: " + path);
}

inline FeatureSeries read_feature_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path);
  std::string line;
  std::getline(is, line);
  if (!line.starts_with("pos,y_d,valid")) throw DataError("unexpected feature header in " + path);
  FeatureSeries f;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw DataError("malformed row in " + path);
    std::string_view sv(line);
    f.pos.push_back(detail::parse_double(sv.substr(0, c1), path));
    f.y_d.push_back(detail::parse_double(sv.substr(c1 + 1, c2 - c1 - 1), path));
    f.valid.push_back(detail::parse_double(sv.substr(c2 + 1), path) != 0.0 ? 1 : 0);
  }
  return f;
}

inline nlohmann::json feature_manifest(const FeatureSeries& f, Method m, const std::optional<IdentifiedSystem>& sys) {
  nlohmann::json j;
  j["method"] = method_name(m);
  j["band"] = {f.band.f_lo, f.band.f_hi};
  j["c51"] = f.c51;
  if (sys) {
    j["f_v_hat"] = sys->f_v_hat;
    j["f1_hat"] = sys->f1_hat;
    j["k1_tilde_hat"] = sys->k1_tilde_hat;
    j["f_d1"] = sys->f_d1;
  }
  return j;
}

}  // namespace ibhm::feature
