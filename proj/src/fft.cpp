#include "cdr/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace cdr {

namespace {
// FFTW plan creation/destruction is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw std::invalid_argument("RealFft: size must be >= 2");
  real_buf_ = fftw_alloc_real(n_);
  cplx_buf_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(bins()));
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_fwd_ = fftw_plan_dft_r2c_1d(n_, real_buf_,
                                   reinterpret_cast<fftw_complex*>(cplx_buf_),
                                   FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_1d(n_, reinterpret_cast<fftw_complex*>(cplx_buf_),
                                   real_buf_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_buf_);
  fftw_free(cplx_buf_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (static_cast<int>(in.size()) != n_ || static_cast<int>(out.size()) != bins())
    throw std::invalid_argument("RealFft::forward: size mismatch");
  std::memcpy(real_buf_, in.data(), n_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::memcpy(out.data(), cplx_buf_, bins() * sizeof(std::complex<double>));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (static_cast<int>(in.size()) != bins() || static_cast<int>(out.size()) != n_)
    throw std::invalid_argument("RealFft::inverse: size mismatch");
  std::memcpy(cplx_buf_, in.data(), bins() * sizeof(std::complex<double>));
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const double inv_n = 1.0 / n_;
  for (int i = 0; i < n_; ++i) out[i] = real_buf_[i] * inv_n;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const size_t out_len = a.size() + b.size() - 1;
  size_t n = 1;
  while (n < out_len) n <<= 1;

  RealFft fft(static_cast<int>(n));
  std::vector<double> ta(n, 0.0), tb(n, 0.0);
  std::copy(a.begin(), a.end(), ta.begin());
  std::copy(b.begin(), b.end(), tb.begin());
  std::vector<std::complex<double>> fa(fft.bins()), fb(fft.bins());
  fft.forward(ta, fa);
  fft.forward(tb, fb);
  for (int k = 0; k < fft.bins(); ++k) fa[k] *= fb[k];
  std::vector<double> full(n);
  fft.inverse(fa, full);
  full.resize(out_len);
  return full;
}

}  // namespace cdr
