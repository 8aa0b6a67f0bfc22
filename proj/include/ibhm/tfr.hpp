#pragma once
// Continuous wavelet transform with the analytic Morlet wavelet,
// instantaneous-frequency estimation, synchrosqueezing and band-limited
// inversion, plus a zero-phase Butterworth band-pass for comparison.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ibhm/errors.hpp"
#include "ibhm/fft.hpp"

namespace ibhm::tfr {

using cplx = std::complex<double>;

/// Row-major (rows x cols) grid.
template <class T>
struct Grid {
  std::size_t rows = 0, cols = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}
  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

struct Band {
  double f_lo = 0.0;
  double f_hi = 0.0;

  bool contains(double f) const { return f >= f_lo && f <= f_hi; }

  void validate(double nyquist) const {
    if (!(f_lo > 0.0) || !(f_hi > f_lo)) throw ValidationError("band requires 0 < f_lo < f_hi");
    if (!(f_hi < nyquist)) throw DomainError("band upper edge must lie below Nyquist");
  }
};

/// Analytic Morlet wavelet with the admissibility correction term:
///   psi^(xi) = [exp(-(xi - w0)^2 / 2) - exp(-(xi^2 + w0^2) / 2)] for xi > 0, else 0.
struct Morlet {
  double omega0 = 6.0;

  double hat(double xi) const {
    if (xi <= 0.0) return 0.0;
    return std::exp(-0.5 * (xi - omega0) * (xi - omega0)) - std::exp(-0.5 * (xi * xi + omega0 * omega0));
  }

  /// Pseudo-frequency (Hz) of scale a (s): the peak of psi^(a w).
  double center_freq(double a) const { return omega0 / (2.0 * std::numbers::pi * a); }
  double scale_for(double f) const { return omega0 / (2.0 * std::numbers::pi * f); }

  /// C = (1/2) int_0^inf psi^(xi) / xi dxi.
  double admissibility() const {
    auto f = [this](double xi) {
      if (xi < 1e-12) {
        // psi^(xi)/xi -> w0 exp(-w0^2/2) as xi -> 0
        return omega0 * std::exp(-0.5 * omega0 * omega0);
      }
      return hat(xi) / xi;
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double split = omega0 + 12.0;
    double err = 0.0;
    double head = GK::integrate(f, 0.0, split, 20, 1e-13, &err);
    double tail = GK::integrate(f, split, std::numeric_limits<double>::infinity(), 20, 1e-13, &err);
    return 0.5 * (head + tail);
  }
};

struct CwtResult {
  Grid<cplx> W;             // scales x time
  Grid<cplx> dW;            // d/db W, same layout
  std::vector<double> scales;        // a_k (s), strictly increasing
  std::vector<double> center_freqs;  // Hz, decreasing
  std::vector<double> dscales;       // Delta a_k
  double dt = 0.0;
  int voices_per_octave = 32;
  Morlet wavelet;
};

struct CwtOptions {
  int voices_per_octave = 32;
  Morlet wavelet{};
};

/// CWT over scales whose pseudo-frequencies cover `range`, computed in the
/// frequency domain on the symmetric extension [x, reverse(x)] of the signal.
inline CwtResult cwt(std::span<const double> signal, double dt, const Band& range, const CwtOptions& opt = {}) {
  const std::size_t N = signal.size();
  if (N < 64) throw ValidationError("cwt needs at least 64 samples");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (opt.voices_per_octave < 1) throw ValidationError("voices_per_octave must be >= 1");
  range.validate(0.5 / dt);

  CwtResult r;
  r.dt = dt;
  r.voices_per_octave = opt.voices_per_octave;
  r.wavelet = opt.wavelet;
  const int nv = opt.voices_per_octave;
  const double a_min = r.wavelet.scale_for(range.f_hi);
  const auto n_scales =
      static_cast<std::size_t>(std::ceil(nv * std::log2(range.f_hi / range.f_lo) - 1e-9)) + 1;
  const double spacing = std::sinh(std::numbers::ln2 / nv);  // central difference of a 2^(k/nv) ladder
  for (std::size_t k = 0; k < n_scales; ++k) {
    const double a = a_min * std::exp2(static_cast<double>(k) / nv);
    r.scales.push_back(a);
    r.center_freqs.push_back(r.wavelet.center_freq(a));
    r.dscales.push_back(a * spacing);
  }

  const std::size_t M = 2 * N;
  fft::cvec ext(M);
  for (std::size_t i = 0; i < N; ++i) {
    ext[i] = signal[i];
    ext[M - 1 - i] = signal[i];
  }
  const fft::cvec X = fft::forward(ext);
  std::vector<double> omega(M);
  for (std::size_t k = 0; k < M; ++k) omega[k] = fft::bin_omega(k, M, dt);
  omega[M / 2] = 0.0;  // Nyquist bin carries no analytic content

  r.W = Grid<cplx>(n_scales, N);
  r.dW = Grid<cplx>(n_scales, N);
  fft::cvec buf(M), dbuf(M);
  for (std::size_t s = 0; s < n_scales; ++s) {
    const double a = r.scales[s];
    const double norm = std::sqrt(a);
    const double xi_max = r.wavelet.omega0 + 9.0;  // psi^ < 1e-17 beyond
    for (std::size_t k = 0; k < M; ++k) {
      const double xi = a * omega[k];
      if (xi <= 0.0 || xi > xi_max) {
        buf[k] = 0.0;
        dbuf[k] = 0.0;
        continue;
      }
      const double h = norm * r.wavelet.hat(xi);
      buf[k] = X[k] * h;
      dbuf[k] = X[k] * cplx(0.0, omega[k] * h);
    }
    const fft::cvec w = fft::inverse(buf);
    const fft::cvec dw = fft::inverse(dbuf);
    std::copy_n(w.begin(), N, r.W.row(s).begin());
    std::copy_n(dw.begin(), N, r.dW.row(s).begin());
  }
  return r;
}

struct FreqGrid {
  Grid<double> f;          // instantaneous frequency (Hz)
  Grid<std::uint8_t> valid;
  double gamma = 0.0;
};

/// w_y = Re(-i dW / W) / (2 pi), flagged invalid where |W| <= gamma max|W|.
inline FreqGrid inst_freq(const CwtResult& c, double gamma = 1e-8) {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  double peak = 0.0;
  for (const auto& w : c.W.data) peak = std::max(peak, std::abs(w));
  FreqGrid g;
  g.gamma = gamma;
  g.f = Grid<double>(c.W.rows, c.W.cols, 0.0);
  g.valid = Grid<std::uint8_t>(c.W.rows, c.W.cols, 0);
  const double thr = gamma * peak;
  for (std::size_t i = 0; i < c.W.data.size(); ++i) {
    const cplx w = c.W.data[i];
    const double mag = std::abs(w);
    if (!(mag > thr) || mag == 0.0) continue;
    const cplx q = cplx(0.0, -1.0) * c.dW.data[i] / w;
    g.f.data[i] = q.real() / (2.0 * std::numbers::pi);
    g.valid.data[i] = 1;
  }
  return g;
}

struct SwtResult {
  Grid<cplx> T;                   // bins x time
  std::vector<double> freq_bins;  // Hz, log-spaced, increasing
  std::vector<double> dfreq;      // bin widths (Hz)
  double gamma = 0.0;
  double admissibility = 0.0;
};

/// Reassigns W(a_k, b) a_k^(-3/2) Delta a_k / Delta w_c into the log-spaced
/// bin nearest w_y(a_k, b). n_bins = 0 uses one bin per scale.
inline SwtResult synchrosqueeze(const CwtResult& c, const FreqGrid& omega, std::size_t n_bins = 0) {
  if (omega.f.rows != c.W.rows || omega.f.cols != c.W.cols)
    throw ValidationError("frequency grid does not match the CWT");
  if (n_bins == 0) n_bins = c.scales.size();
  if (n_bins < 2) throw ValidationError("need at least two frequency bins");
  const double f_min = c.center_freqs.back(), f_max = c.center_freqs.front();
  const double log_step = std::log(f_max / f_min) / static_cast<double>(n_bins - 1);
  const double edge = 2.0 * std::sinh(0.5 * log_step);

  SwtResult s;
  s.gamma = omega.gamma;
  s.admissibility = c.wavelet.admissibility();
  for (std::size_t j = 0; j < n_bins; ++j) {
    const double f = f_min * std::exp(log_step * static_cast<double>(j));
    s.freq_bins.push_back(f);
    s.dfreq.push_back(f * edge);
  }
  const std::size_t N = c.W.cols;
  s.T = Grid<cplx>(n_bins, N);
  // Fixed scale order per column keeps the accumulation deterministic.
  for (std::size_t k = 0; k < c.scales.size(); ++k) {
    const double wgt = std::pow(c.scales[k], -1.5) * c.dscales[k];
    for (std::size_t b = 0; b < N; ++b) {
      if (!omega.valid(k, b)) continue;
      const double f = omega.f(k, b);
      if (!(f > 0.0)) continue;
      const double pos = std::log(f / f_min) / log_step;
      if (pos < -0.5 || pos >= static_cast<double>(n_bins) - 0.5) continue;
      const auto j = static_cast<std::size_t>(std::lround(pos));
      s.T(j, b) += c.W(k, b) * (wgt / s.dfreq[j]);
    }
  }
  return s;
}

/// Re[sum over bins in band of T Delta w_c] / C.
inline std::vector<double> iswt_band(const SwtResult& s, const Band& band) {
  std::vector<double> out(s.T.cols, 0.0);
  std::size_t used = 0;
  for (std::size_t j = 0; j < s.freq_bins.size(); ++j) {
    if (!band.contains(s.freq_bins[j])) continue;
    ++used;
    const auto row = s.T.row(j);
    for (std::size_t b = 0; b < out.size(); ++b) out[b] += (row[b] * s.dfreq[j]).real();
  }
  if (used == 0) throw DomainError("band contains no synchrosqueezing bins");
  for (double& v : out) v /= s.admissibility;
  return out;
}

/// Re[sum over scales with centre frequency in band of W a^(-3/2) Delta a] / C.
inline std::vector<double> icwt_band(const CwtResult& c, const Band& band) {
  std::vector<double> out(c.W.cols, 0.0);
  std::size_t used = 0;
  for (std::size_t k = 0; k < c.scales.size(); ++k) {
    if (!band.contains(c.center_freqs[k])) continue;
    ++used;
    const double wgt = std::pow(c.scales[k], -1.5) * c.dscales[k];
    const auto row = c.W.row(k);
    for (std::size_t b = 0; b < out.size(); ++b) out[b] += row[b].real() * wgt;
  }
  if (used == 0) throw DomainError("band contains no CWT scales");
  const double C = c.wavelet.admissibility();
  for (double& v : out) v /= C;
  return out;
}

namespace detail {

struct Biquad {
  double b0, b1, b2, a1, a2;

  // Transposed direct form II, state primed for a constant input x0.
  void run(std::vector<double>& x) const {
    if (x.empty()) return;
    const double dc = (b0 + b1 + b2) / (1.0 + a1 + a2);
    double z1 = (dc - b0) * x[0];
    double z2 = (b2 - a2 * dc) * x[0];
    for (double& v : x) {
      const double in = v;
      const double y = b0 * in + z1;
      z1 = b1 * in - a1 * y + z2;
      z2 = b2 * in - a2 * y;
      v = y;
    }
  }
};

inline Biquad rbj(double f0, double dt, double Q, bool highpass) {
  const double w0 = 2.0 * std::numbers::pi * f0 * dt;
  const double sw = std::sin(w0);
  const double s2 = std::sin(0.5 * w0);
  const double cw = std::cos(w0);
  const double one_minus_cos = 2.0 * s2 * s2;  // avoids cancellation at tiny w0
  const double alpha = sw / (2.0 * Q);
  const double a0 = 1.0 + alpha;
  Biquad q{};
  if (highpass) {
    q.b0 = (2.0 - one_minus_cos) / 2.0 / a0;
    q.b1 = -(2.0 - one_minus_cos) / a0;
    q.b2 = q.b0;
  } else {
    q.b0 = one_minus_cos / 2.0 / a0;
    q.b1 = one_minus_cos / a0;
    q.b2 = q.b0;
  }
  q.a1 = -2.0 * cw / a0;
  q.a2 = (1.0 - alpha) / a0;
  return q;
}

// Pole-pair Q values of a 4th-order Butterworth prototype.
inline constexpr double kButterQ[2] = {0.54119610014619698, 1.3065629648763766};

}  // namespace detail

/// Zero-phase band-pass: 4th-order Butterworth high-pass at f_lo cascaded
/// with a 4th-order low-pass at f_hi, run forward and backward over an
/// odd-reflection padded copy of the signal.
inline std::vector<double> bandpass(std::span<const double> signal, double dt, const Band& band) {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  band.validate(0.5 / dt);
  const std::size_t N = signal.size();
  if (N < 2) throw ValidationError("bandpass needs at least two samples");
  std::vector<detail::Biquad> stages;
  for (double Q : detail::kButterQ) stages.push_back(detail::rbj(band.f_lo, dt, Q, true));
  for (double Q : detail::kButterQ) stages.push_back(detail::rbj(band.f_hi, dt, Q, false));

  const std::size_t pad = std::min<std::size_t>(N - 1, static_cast<std::size_t>(std::ceil(3.0 / (band.f_lo * dt))));
  std::vector<double> x;
  x.reserve(N + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) x.push_back(2.0 * signal[0] - signal[i]);
  x.insert(x.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) x.push_back(2.0 * signal[N - 1] - signal[N - 1 - i]);

  for (const auto& st : stages) st.run(x);
  std::reverse(x.begin(), x.end());
  for (const auto& st : stages) st.run(x);
  std::reverse(x.begin(), x.end());
  return {x.begin() + static_cast<std::ptrdiff_t>(pad), x.begin() + static_cast<std::ptrdiff_t>(pad + N)};
}

/// |grid| as CSV, one row per frequency from highest to lowest; first column
/// holds the frequency.
inline void write_magnitude_csv(std::ostream& os, const Grid<cplx>& g, std::span<const double> freqs) {
  if (freqs.size() != g.rows) throw ValidationError("frequency axis does not match grid");
  std::vector<std::size_t> order(g.rows);
  for (std::size_t i = 0; i < g.rows; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return freqs[a] > freqs[b]; });
  os.precision(9);
  for (std::size_t r : order) {
    os << freqs[r];
    for (std::size_t c = 0; c < g.cols; ++c) os << ',' << std::abs(g(r, c));
    os << '\n';
  }
}

}  // namespace ibhm::tfr
