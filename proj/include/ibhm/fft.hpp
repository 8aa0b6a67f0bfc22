#pragma once
// Thin FFTW wrapper. Plans are cached per (size, direction) and executed with
// the new-array interface, which FFTW documents as thread-safe; only planning
// needs the lock.

#include <complex>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace ibhm::fft {

using cvec = std::vector<std::complex<double>>;

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    cvec in(n), out(n);
    fftw_plan p = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void run(const cvec& in, cvec& out, int sign) {
  out.resize(in.size());
  if (in.empty()) return;
  fftw_plan p = PlanCache::instance().get(static_cast<int>(in.size()), sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

/// Unnormalised forward DFT: X_k = sum_n x_n exp(-2 pi i k n / N).
inline cvec forward(const cvec& x) {
  cvec out;
  detail::run(x, out, FFTW_FORWARD);
  return out;
}

/// Inverse DFT including the 1/N factor.
inline cvec inverse(const cvec& X) {
  cvec out;
  detail::run(X, out, FFTW_BACKWARD);
  const double s = 1.0 / static_cast<double>(X.size());
  for (auto& v : out) v *= s;
  return out;
}

inline cvec forward_real(const std::vector<double>& x) {
  cvec c(x.begin(), x.end());
  return forward(c);
}

/// Angular frequency (rad/s) of bin k in an n-point transform at sample interval dt.
inline double bin_omega(std::size_t k, std::size_t n, double dt) {
  const double df = 1.0 / (static_cast<double>(n) * dt);
  const auto kk = static_cast<double>(k <= n / 2 ? static_cast<long long>(k)
                                                 : static_cast<long long>(k) - static_cast<long long>(n));
  return 2.0 * 3.141592653589793238462643383279502884 * kk * df;
}

}  // namespace ibhm::fft
