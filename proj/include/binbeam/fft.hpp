#pragma once

// Thin RAII layer over FFTW's real-to-complex transforms. Plans are cached per
// length and shared; FFTW's new-array execute functions are reentrant, only
// planning needs the lock.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "binbeam/error.hpp"

namespace binbeam {

using cplx = std::complex<double>;

namespace detail {

struct FftPlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~FftPlanPair() {
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

inline std::mutex& fft_planner_mutex() {
  static std::mutex m;
  return m;
}

inline const FftPlanPair& fft_plans(std::size_t n) {
  static std::map<std::size_t, std::unique_ptr<FftPlanPair>> cache;
  std::lock_guard<std::mutex> lock(fft_planner_mutex());
  auto& slot = cache[n];
  if (!slot) {
    auto plans = std::make_unique<FftPlanPair>();
    std::vector<double> re(n);
    std::vector<cplx> sp(n / 2 + 1);
    const int len = static_cast<int>(n);
    auto* spec = reinterpret_cast<fftw_complex*>(sp.data());
    plans->forward = fftw_plan_dft_r2c_1d(len, re.data(), spec,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans->inverse = fftw_plan_dft_c2r_1d(
        len, spec, re.data(),
        FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
    if (!plans->forward || !plans->inverse)
      throw Error("fft: planning failed for length " + std::to_string(n));
    slot = std::move(plans);
  }
  return *slot;
}

}  // namespace detail

// Real FFT of fixed length n. forward() yields the n/2+1 non-negative
// frequency bins; inverse() is normalized so inverse(forward(x)) == x.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n), plans_(&detail::fft_plans(n)) {
    if (n == 0) throw ConfigError("fft: zero length");
  }

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  void forward(std::span<const double> in, std::span<cplx> out) const {
    if (in.size() != n_ || out.size() != bins())
      throw Error("fft: forward size mismatch");
    scratch_re_.assign(in.begin(), in.end());
    fftw_execute_dft_r2c(plans_->forward, scratch_re_.data(),
                         reinterpret_cast<fftw_complex*>(out.data()));
  }

  void inverse(std::span<const cplx> in, std::span<double> out) const {
    if (in.size() != bins() || out.size() != n_)
      throw Error("fft: inverse size mismatch");
    scratch_sp_.assign(in.begin(), in.end());
    fftw_execute_dft_c2r(plans_->inverse,
                         reinterpret_cast<fftw_complex*>(scratch_sp_.data()),
                         out.data());
    const double scale = 1.0 / static_cast<double>(n_);
    for (double& v : out) v *= scale;
  }

 private:
  std::size_t n_;
  const detail::FftPlanPair* plans_;
  mutable std::vector<double> scratch_re_;
  mutable std::vector<cplx> scratch_sp_;
};

}  // namespace binbeam
