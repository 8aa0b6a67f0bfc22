#pragma once
// Domain types shared by the simulator, the signal-processing pipeline and
// the diagnosis harness.
//
// Sign convention: beam deflection u(x,t) and vehicle displacement y(t) are
// positive downward, measured from static equilibrium. SignalRecord::a is the
// vehicle's vertical acceleration in the same convention.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibhm/errors.hpp"

namespace ibhm {

inline constexpr double kGravity = 9.81;  // m/s^2

namespace detail {

inline void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw ValidationError(std::string(name) + " must be positive and finite");
}

inline bool rel_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace detail

/// Mass per unit length that makes a simply supported prismatic beam of span
/// `L` and stiffness `EI0` have first natural frequency `f1`:
/// (pi/L)^2 sqrt(EI0/rhoA) = 2 pi f1.
inline double derive_rhoA(double L, double EI0, double f1) {
  detail::require_positive(L, "L");
  detail::require_positive(EI0, "EI0");
  detail::require_positive(f1, "f1");
  const double k = std::numbers::pi / L;
  const double w = 2.0 * std::numbers::pi * f1;
  return EI0 * (k * k) * (k * k) / (w * w);
}

/// Spring stiffness of a single-DOF vehicle: k = m (2 pi f)^2.
inline double derive_kv(double m_v, double f_v) {
  detail::require_positive(m_v, "m_v");
  detail::require_positive(f_v, "f_v");
  const double w = 2.0 * std::numbers::pi * f_v;
  return m_v * w * w;
}

struct BridgeSpec {
  std::string id;
  double L = 0.0;         // span (m)
  double EI0 = 0.0;       // undamaged flexural stiffness (Pa m^4)
  double rhoA = 0.0;      // mass per unit length (kg/m), derived
  double f1 = 0.0;        // first natural frequency (Hz)
  double freq_law = 0.0;  // f_n = freq_law * n^2 (Hz)

  static BridgeSpec from_frequency(std::string id, double L, double EI0, double f1) {
    BridgeSpec b;
    b.id = std::move(id);
    b.L = L;
    b.EI0 = EI0;
    b.f1 = f1;
    b.freq_law = f1;
    b.rhoA = derive_rhoA(L, EI0, f1);
    return b;
  }

  double frequency(int n) const { return freq_law * n * n; }

  void validate() const {
    detail::require_positive(L, "L");
    detail::require_positive(EI0, "EI0");
    detail::require_positive(rhoA, "rhoA");
    detail::require_positive(f1, "f1");
    const double k = std::numbers::pi / L;
    const double lhs = k * k * std::sqrt(EI0 / rhoA);
    if (!detail::rel_close(lhs, 2.0 * std::numbers::pi * f1, 1e-9))
      throw ValidationError("bridge " + id + ": rhoA inconsistent with (L, EI0, f1)");
    if (!detail::rel_close(freq_law, f1, 1e-12))
      throw ValidationError("bridge " + id + ": frequency law must satisfy f_1 = c");
  }
};

struct VehicleSpec {
  double m_v = 0.0;  // kg
  double f_v = 0.0;  // Hz
  double k_v = 0.0;  // N/m
  double c_v = 0.0;  // N s/m
  double v = 0.0;    // m/s

  static VehicleSpec make(double m_v, double f_v, double v, double c_v = 0.0) {
    VehicleSpec s{m_v, f_v, derive_kv(m_v, f_v), c_v, v};
    s.validate();
    return s;
  }

  double omega() const { return std::sqrt(k_v / m_v); }

  void validate() const {
    detail::require_positive(m_v, "m_v");
    detail::require_positive(f_v, "f_v");
    detail::require_positive(v, "v");
    if (!(c_v >= 0.0)) throw ValidationError("c_v must be non-negative");
    const double w = 2.0 * std::numbers::pi * f_v;
    if (!detail::rel_close(k_v, m_v * w * w, 1e-9))
      throw ValidationError("k_v inconsistent with (m_v, f_v)");
  }
};

/// Local stiffness loss over [x_s - l_s/2, x_s + l_s/2]. R_s == 0 is the
/// undamaged beam, in which case x_s is absent.
struct DamageSpec {
  std::optional<double> x_s;
  double l_s = 0.6;
  double R_s = 0.0;

  static DamageSpec none(double l_s = 0.6) { return DamageSpec{std::nullopt, l_s, 0.0}; }
  static DamageSpec at(double x_s, double l_s, double R_s) { return DamageSpec{x_s, l_s, R_s}; }

  bool damaged() const { return R_s > 0.0; }

  void validate(double L) const {
    if (!(R_s >= 0.0 && R_s < 1.0)) throw ValidationError("R_s must lie in [0, 1)");
    if (!(l_s >= 0.0)) throw ValidationError("l_s must be non-negative");
    if (R_s > 0.0) {
      if (!x_s) throw ValidationError("damaged beam requires x_s");
      if (!(l_s > 0.0)) throw ValidationError("damaged beam requires l_s > 0");
      if (*x_s - 0.5 * l_s < 0.0 || *x_s + 0.5 * l_s > L)
        throw ValidationError("damage interval must lie within [0, L]");
    }
  }
};

/// EI(x): EI0 outside the damage interval, EI0 (1 - R_s) on the closed interval.
inline double stiffness_profile(const BridgeSpec& bridge, const DamageSpec& damage, double x) {
  if (!(x >= 0.0 && x <= bridge.L)) throw DomainError("position outside [0, L]");
  if (!damage.damaged()) return bridge.EI0;
  const double lo = *damage.x_s - 0.5 * damage.l_s;
  const double hi = *damage.x_s + 0.5 * damage.l_s;
  return (x >= lo && x <= hi) ? bridge.EI0 * (1.0 - damage.R_s) : bridge.EI0;
}

struct ScenarioSpec {
  BridgeSpec bridge;
  VehicleSpec vehicle;
  DamageSpec damage;
  double noise_std = 0.0;     // per-node force noise std (N)
  double dt = 1e-3;           // output sample interval (s)
  std::uint64_t seed = 0;
  int trial = 0;
  double beam_damping = 0.0;  // mu, viscous per unit length (N s/m^2); not serialized

  double duration() const { return bridge.L / vehicle.v; }

  std::size_t sample_count() const {
    // The small slack keeps exact multiples (30 m at 3 m/s, 1 ms) from losing a sample.
    return static_cast<std::size_t>(std::floor(bridge.L / (vehicle.v * dt) + 1e-9)) + 1;
  }

  void validate() const {
    bridge.validate();
    vehicle.validate();
    damage.validate(bridge.L);
    detail::require_positive(dt, "dt");
    if (!(noise_std >= 0.0)) throw ValidationError("noise_std must be non-negative");
    if (!(beam_damping >= 0.0)) throw ValidationError("beam damping must be non-negative");
  }
};

struct SignalRecord {
  ScenarioSpec scenario;
  std::vector<double> t;
  std::vector<double> a;
};

// JSON manifest with the flat field set id, L, EI0, rhoA, f1, m_v, f_v, k_v,
// c_v, v, x_s, l_s, R_s, noise_std, dt, seed, trial.
inline nlohmann::json to_json(const ScenarioSpec& s) {
  nlohmann::json j;
  j["id"] = s.bridge.id;
  j["L"] = s.bridge.L;
  j["EI0"] = s.bridge.EI0;
  j["rhoA"] = s.bridge.rhoA;
  j["f1"] = s.bridge.f1;
  j["m_v"] = s.vehicle.m_v;
  j["f_v"] = s.vehicle.f_v;
  j["k_v"] = s.vehicle.k_v;
  j["c_v"] = s.vehicle.c_v;
  j["v"] = s.vehicle.v;
  j["x_s"] = s.damage.x_s ? nlohmann::json(*s.damage.x_s) : nlohmann::json(nullptr);
  j["l_s"] = s.damage.l_s;
  j["R_s"] = s.damage.R_s;
  j["noise_std"] = s.noise_std;
  j["dt"] = s.dt;
  j["seed"] = s.seed;
  j["trial"] = s.trial;
  return j;
}

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  try {
    ScenarioSpec s;
    s.bridge.id = j.at("id").get<std::string>();
    s.bridge.L = j.at("L").get<double>();
    s.bridge.EI0 = j.at("EI0").get<double>();
    s.bridge.rhoA = j.at("rhoA").get<double>();
    s.bridge.f1 = j.at("f1").get<double>();
    s.bridge.freq_law = s.bridge.f1;
    s.vehicle.m_v = j.at("m_v").get<double>();
    s.vehicle.f_v = j.at("f_v").get<double>();
    s.vehicle.k_v = j.at("k_v").get<double>();
    s.vehicle.c_v = j.at("c_v").get<double>();
    s.vehicle.v = j.at("v").get<double>();
    if (!j.at("x_s").is_null()) s.damage.x_s = j.at("x_s").get<double>();
    s.damage.l_s = j.at("l_s").get<double>();
    s.damage.R_s = j.at("R_s").get<double>();
    s.noise_std = j.at("noise_std").get<double>();
    s.dt = j.at("dt").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.trial = j.at("trial").get<int>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed scenario manifest: ") + e.what());
  }
}

inline constexpr double kPresetEI0 = 14.54e9;

/// The five simulated bridges: spans 25, 25, 25, 20, 30 m with f_n = c n^2,
/// c = 2, 2.5, 3, 2.5, 2.5 Hz, common EI0.
inline std::vector<BridgeSpec> preset_bridges() {
  return {
      BridgeSpec::from_frequency("B1", 25.0, kPresetEI0, 2.0),
      BridgeSpec::from_frequency("B2", 25.0, kPresetEI0, 2.5),
      BridgeSpec::from_frequency("B3", 25.0, kPresetEI0, 3.0),
      BridgeSpec::from_frequency("B4", 20.0, kPresetEI0, 2.5),
      BridgeSpec::from_frequency("B5", 30.0, kPresetEI0, 2.5),
  };
}

inline VehicleSpec preset_vehicle() { return VehicleSpec::make(100.0, 6.5, 3.0); }

}  // namespace ibhm
