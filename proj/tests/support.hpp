#pragma once
// Shared helpers for the unit tests: error norms, small RNG-driven
// generators and cached noise-free simulations.

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ibhm/ibhm.hpp"

namespace ibhm::test {

inline double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

/// ||a - b|| / ||b|| over [lo, hi).
inline double rel_err(std::span<const double> a, std::span<const double> b, std::size_t lo, std::size_t hi) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

inline double rel_err_interior(std::span<const double> a, std::span<const double> b, double keep) {
  const std::size_t n = b.size();
  const auto cut = static_cast<std::size_t>(std::floor(0.5 * (1.0 - keep) * static_cast<double>(n)));
  return rel_err(a, b, cut, n - cut);
}

inline std::vector<double> tones(std::size_t n, double dt, std::initializer_list<std::pair<double, double>> fa) {
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [f, a] : fa) x[i] += a * std::sin(2.0 * std::numbers::pi * f * dt * static_cast<double>(i));
  return x;
}

/// Seeded generator for the property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
};

inline BridgeSpec bridge(const std::string& id) {
  for (const auto& b : preset_bridges())
    if (b.id == id) return b;
  throw ConfigError("unknown bridge " + id);
}

inline ScenarioSpec scenario(const std::string& id, double R = 0.0, double x_over_L = 0.5, double noise = 0.0,
                             std::uint64_t seed = 1) {
  ScenarioSpec sc;
  sc.bridge = bridge(id);
  sc.vehicle = preset_vehicle();
  sc.damage = R > 0.0 ? DamageSpec::at(x_over_L * sc.bridge.L, 0.6, R) : DamageSpec::none();
  sc.noise_std = noise;
  sc.dt = 1e-3;
  sc.seed = seed;
  return sc;
}

/// Noise-free records are reused across tests in one binary.
inline const SignalRecord& noise_free(const std::string& id, double R = 0.0, double x_over_L = 0.5) {
  static std::map<std::tuple<std::string, double, double>, SignalRecord> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  const auto key = std::make_tuple(id, R, R > 0.0 ? x_over_L : -1.0);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, fem::simulate_vbi(scenario(id, R, x_over_L))).first;
  return it->second;
}

inline const feature::FeatureSeries& noise_free_feature(const std::string& id, double R = 0.0, double x_over_L = 0.5) {
  static std::map<std::tuple<std::string, double, double>, feature::FeatureSeries> cache;
  const auto key = std::make_tuple(id, R, R > 0.0 ? x_over_L : -1.0);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const auto f = feature::extract(noise_free(id, R, x_over_L), feature::Method::ours);
    it = cache.emplace(key, feature::resample(f, feature::uniform_grid(1001))).first;
  }
  return it->second;
}

}  // namespace ibhm::test
