#pragma once
// Closed-form quantities for a sprung mass crossing a simply supported beam:
// mode shapes, equivalent modal parameters, the domain-invariance factor C51,
// the ideal first-mode feature and the undamaged-beam vehicle response.

#include <cmath>
#include <concepts>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ibhm/errors.hpp"
#include "ibhm/model.hpp"

namespace ibhm::analytic {

template <class S>
concept ModeShape = requires(const S& s, double x) {
  { s.value(x) } -> std::convertible_to<double>;
  { s.slope(x) } -> std::convertible_to<double>;
  { s.curvature(x) } -> std::convertible_to<double>;
  { s.length() } -> std::convertible_to<double>;
  { s.breakpoints() } -> std::convertible_to<std::vector<double>>;
};

/// sin(n pi x / L), the undamaged simply supported mode.
struct SineMode {
  int n = 1;
  double L = 1.0;

  double k() const { return n * std::numbers::pi / L; }
  double value(double x) const { return std::sin(k() * x); }
  double slope(double x) const { return k() * std::cos(k() * x); }
  double curvature(double x) const { return -k() * k() * std::sin(k() * x); }
  double length() const { return L; }
  std::vector<double> breakpoints() const { return {}; }
};

inline double mode_shape_sine(int n, double x, double L) {
  if (!(x >= 0.0 && x <= L)) throw DomainError("position outside [0, L]");
  return SineMode{n, L}.value(x);
}

/// Natural cubic spline (zero curvature at both ends, as for pinned supports).
class NaturalCubicSpline {
 public:
  NaturalCubicSpline() = default;
  NaturalCubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw ValidationError("spline needs >= 3 matching knots");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw ValidationError("spline knots must increase strictly");
    m_.assign(n, 0.0);
    // Thomas algorithm on the interior second derivatives.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      const double a = h0, b = 2.0 * (h0 + h1), cc = h1;
      const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = d[i] - c[i] * m_[i + 1];
      if (i == 1) break;
    }
  }

  double operator()(double x) const { return eval(x, 0); }
  double derivative(double x) const { return eval(x, 1); }
  double second_derivative(double x) const { return eval(x, 2); }
  const std::vector<double>& knots() const { return x_; }

 private:
  double eval(double x, int order) const {
    const std::size_t n = x_.size();
    std::size_t i = 0;
    if (x >= x_[n - 1]) {
      i = n - 2;
    } else if (x > x_[0]) {
      i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    }
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - x) / h, B = (x - x_[i]) / h;
    switch (order) {
      case 0:
        return A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
      case 1:
        return (y_[i + 1] - y_[i]) / h - (3.0 * A * A - 1.0) * h / 6.0 * m_[i] + (3.0 * B * B - 1.0) * h / 6.0 * m_[i + 1];
      default:
        return A * m_[i] + B * m_[i + 1];
    }
  }

  std::vector<double> x_, y_, m_;
};

/// Mode shape sampled at nodes (e.g. from the FE eigen-solve) and splined.
struct SplineMode {
  NaturalCubicSpline spline;
  double L = 1.0;

  /// Scales the samples so that the largest |value| is 1, matching sin().
  static SplineMode from_samples(std::span<const double> x, std::span<const double> phi, bool unit_peak = true) {
    std::vector<double> xs(x.begin(), x.end()), ys(phi.begin(), phi.end());
    if (unit_peak) {
      double peak = 0.0;
      for (double v : ys) peak = std::max(peak, std::abs(v));
      if (!(peak > 0.0)) throw ValidationError("mode shape is identically zero");
      for (double& v : ys) v /= peak;
    }
    SplineMode s;
    s.L = xs.back();
    s.spline = NaturalCubicSpline(std::move(xs), std::move(ys));
    return s;
  }

  double value(double x) const { return spline(x); }
  double slope(double x) const { return spline.derivative(x); }
  double curvature(double x) const { return spline.second_derivative(x); }
  double length() const { return L; }
  std::vector<double> breakpoints() const { return spline.knots(); }
};

struct ModalParams {
  int n = 1;
  double m_tilde = 0.0;      // kg
  double k_tilde = 0.0;      // N/m
  double omega_tilde = 0.0;  // rad/s
  double omega_d = 0.0;      // n pi v / L, rad/s
};

namespace detail {

template <class F>
double integrate_pieces(F&& f, std::vector<double> cuts, double a, double b, double rel_tol) {
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0, scale = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double lo = std::max(a, cuts[i - 1]), hi = std::min(b, cuts[i]);
    if (!(hi > lo)) continue;
    double err = 0.0, l1 = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, 15, rel_tol, &err, &l1);
    scale += l1;
    if (err > rel_tol * std::max(l1, 1e-300) && err > 1e-14 * scale)
      throw NumericalError("quadrature did not converge");
  }
  return total;
}

}  // namespace detail

/// m~_n = int rhoA phi^2 dx and k~_n = int EI(x) phi''^2 dx with EI(x) from
/// the damage model.
template <ModeShape Shape>
ModalParams modal_params(const BridgeSpec& bridge, const DamageSpec& damage, const Shape& shape, int n,
                         double speed = 0.0) {
  damage.validate(bridge.L);
  std::vector<double> cuts = shape.breakpoints();
  if (damage.damaged()) {
    cuts.push_back(*damage.x_s - 0.5 * damage.l_s);
    cuts.push_back(*damage.x_s + 0.5 * damage.l_s);
  }
  const double L = bridge.L;
  const double m = detail::integrate_pieces(
      [&](double x) {
        const double p = shape.value(x);
        return bridge.rhoA * p * p;
      },
      cuts, 0.0, L, 1e-8);
  // Sample EI at piece midpoints so the closed damage interval is honoured
  // without evaluating exactly on its edges.
  std::vector<double> sorted = cuts;
  sorted.push_back(0.0);
  sorted.push_back(L);
  std::sort(sorted.begin(), sorted.end());
  double k = 0.0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double lo = std::max(0.0, sorted[i - 1]), hi = std::min(L, sorted[i]);
    if (!(hi > lo)) continue;
    const double EI = stiffness_profile(bridge, damage, 0.5 * (lo + hi));
    k += detail::integrate_pieces(
        [&](double x) {
          const double c = shape.curvature(x);
          return EI * c * c;
        },
        {}, lo, hi, 1e-8);
  }
  ModalParams mp;
  mp.n = n;
  mp.m_tilde = m;
  mp.k_tilde = k;
  mp.omega_tilde = std::sqrt(k / m);
  mp.omega_d = n * std::numbers::pi * speed / L;
  return mp;
}

/// C51 ~ w_v^2 w1^2 m_v g / (k1 (w1^2 - wd1^2)) * wd2^2 / (w_v^2 - wd2^2).
inline double c51_value(double omega1, double k1, double omega_v, double m_v, double omega_d1) {
  const double omega_d2 = 2.0 * omega_d1;
  const double den1 = omega1 * omega1 - omega_d1 * omega_d1;
  const double den2 = omega_v * omega_v - omega_d2 * omega_d2;
  if (std::abs(den1) <= 1e-6 * omega1 * omega1) throw ResonanceError("bridge frequency resonates with w_d1");
  if (std::abs(den2) <= 1e-6 * omega_v * omega_v) throw ResonanceError("vehicle frequency resonates with w_d2");
  return omega_v * omega_v * omega1 * omega1 * m_v * kGravity / (k1 * den1) * omega_d2 * omega_d2 / den2;
}

/// C51 from nominal (undamaged, sine-mode) bridge parameters.
inline double c51_factor(const BridgeSpec& bridge, const VehicleSpec& vehicle) {
  const double w1 = 2.0 * std::numbers::pi * bridge.f1;
  const double m1 = 0.5 * bridge.rhoA * bridge.L;
  const double wd1 = std::numbers::pi * vehicle.v / bridge.L;
  return c51_value(w1, w1 * w1 * m1, vehicle.omega(), vehicle.m_v, wd1);
}

/// y_d(t) = phi(vt) phi''(vt) + phi'(vt)^2 with dots as time derivatives.
template <ModeShape Shape>
double ideal_feature(const Shape& shape, double v, double t) {
  const double x = std::clamp(v * t, 0.0, shape.length());
  const double p = shape.value(x);
  const double pd = v * shape.slope(x);
  const double pdd = v * v * shape.curvature(x);
  return p * pdd + pd * pd;
}

/// The quasi-static part of the vehicle response over an undamaged beam is
/// C5n y_dn(t) with C51 = gain * C51_quoted, so dividing the band content by
/// the quoted C51 leaves (2 / w_d2^2) y_d1(t).
inline double normalized_feature_gain(double v, double L) {
  const double wd2 = 2.0 * std::numbers::pi * v / L;
  return 2.0 / (wd2 * wd2);
}

/// Per-mode amplitudes of the closed-form acceleration
///   sum_n C1n cos(w_v t) + C2n phi_n sin(w~_n t) + C3n phi_n' cos(w~_n t)
///       + C4n phi_n'' sin(w~_n t) + C5n (phi_n phi_n'' + phi_n'^2),
/// dots being time derivatives along x = vt. Derived for an undamped sprung
/// mass whose wheel load on the beam is approximated by m_v g.
struct SolutionCoeffs {
  struct Mode {
    int n = 1;
    double omega_tilde = 0.0;
    double omega_d = 0.0;
    double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0, C5 = 0.0;
  };
  std::vector<Mode> modes;
  double omega_v = 0.0;
};

inline SolutionCoeffs solution_coeffs(const BridgeSpec& bridge, const VehicleSpec& vehicle, int n_modes) {
  bridge.validate();
  vehicle.validate();
  if (n_modes < 1) throw ValidationError("n_modes must be >= 1");
  if (vehicle.c_v != 0.0) throw ValidationError("closed form assumes an undamped vehicle");
  SolutionCoeffs sc;
  const double wv = vehicle.omega(), wv2 = wv * wv;
  sc.omega_v = wv;
  const double m_tilde = 0.5 * bridge.rhoA * bridge.L;
  auto response = [&](double Omega) {
    const double den = wv2 - Omega * Omega;
    if (std::abs(den) <= 1e-6 * wv2) throw ResonanceError("vehicle resonates with a forcing component");
    return wv2 / den;
  };
  for (int n = 1; n <= n_modes; ++n) {
    SolutionCoeffs::Mode m;
    m.n = n;
    m.omega_tilde = 2.0 * std::numbers::pi * bridge.frequency(n);
    m.omega_d = n * std::numbers::pi * vehicle.v / bridge.L;
    const double wt = m.omega_tilde, wd = m.omega_d;
    if (std::abs(wt * wt - wd * wd) <= 1e-6 * wt * wt) throw ResonanceError("bridge mode resonates with w_dn");
    // Beam mode under a moving constant force, from rest:
    //   q_n = A_n [sin(wd t) - (wd/wt) sin(wt t)]
    const double A = vehicle.m_v * kGravity / m_tilde / (wt * wt - wd * wd);
    const double B = A * wd / wt;
    // Wheel displacement u_c = sum_n A/2 - A/2 cos(2 wd t) - B/2 cos(W- t) + B/2 cos(W+ t);
    // each a cos(W t) term drives the sprung mass into
    //   a r(W) (w_v^2 cos(w_v t) - W^2 cos(W t)),  r(W) = w_v^2 / (w_v^2 - W^2).
    const double Wm = wt - wd, Wp = wt + wd;
    const double r2d = response(2.0 * wd), rm = response(Wm), rp = response(Wp);
    m.C1 = 0.5 * A * wv2 - 0.5 * A * r2d * wv2 - 0.5 * B * rm * wv2 + 0.5 * B * rp * wv2;
    const double beta_m = 0.5 * B * rm * Wm * Wm;
    const double beta_p = -0.5 * B * rp * Wp * Wp;
    m.C2 = beta_m - beta_p;
    m.C3 = (beta_m + beta_p) / wd;
    m.C4 = 0.0;  // folded into C2 since phi'' = -wd^2 phi for sine modes
    m.C5 = 2.0 * A * r2d;
    sc.modes.push_back(m);
  }
  return sc;
}

inline double evaluate(const SolutionCoeffs& sc, double t) {
  double acc = 0.0;
  for (const auto& m : sc.modes) {
    const double wd = m.omega_d;
    const double phi = std::sin(wd * t), phid = wd * std::cos(wd * t), phidd = -wd * wd * phi;
    acc += m.C1 * std::cos(sc.omega_v * t) + m.C2 * phi * std::sin(m.omega_tilde * t) +
           m.C3 * phid * std::cos(m.omega_tilde * t) + m.C4 * phidd * std::sin(m.omega_tilde * t) +
           m.C5 * (phi * phidd + phid * phid);
  }
  return acc;
}

/// Vehicle acceleration over an undamaged, undamped beam from n_modes sine modes.
inline double analytic_vehicle_acceleration(const BridgeSpec& bridge, const VehicleSpec& vehicle, int n_modes,
                                            double t) {
  return evaluate(solution_coeffs(bridge, vehicle, n_modes), t);
}

inline std::vector<double> analytic_vehicle_acceleration(const BridgeSpec& bridge, const VehicleSpec& vehicle,
                                                         int n_modes, std::span<const double> t) {
  const SolutionCoeffs sc = solution_coeffs(bridge, vehicle, n_modes);
  std::vector<double> out;
  out.reserve(t.size());
  for (double ti : t) out.push_back(evaluate(sc, ti));
  return out;
}

/// Sum of the quasi-static C5n terms whose frequency 2 f_dn lies in
/// [f_lo, f_hi], divided by the quoted C51: the undamaged-beam target of the
/// band-limited, normalised feature.
inline double undamaged_band_feature(const BridgeSpec& bridge, const VehicleSpec& vehicle, int n_modes,
                                     double f_lo, double f_hi, double t) {
  const SolutionCoeffs sc = solution_coeffs(bridge, vehicle, n_modes);
  const double c51 = c51_factor(bridge, vehicle);
  double acc = 0.0;
  for (const auto& m : sc.modes) {
    const double f2d = m.omega_d / std::numbers::pi;
    if (f2d < f_lo || f2d > f_hi) continue;
    const double wd = m.omega_d;
    acc += m.C5 * wd * wd * std::cos(2.0 * wd * t);
  }
  return acc / c51;
}

}  // namespace ibhm::analytic
