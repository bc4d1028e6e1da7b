#pragma once

#include <complex>
#include <span>
#include <vector>

namespace cdr {

/// Real-input FFT of fixed size, one-sided output (n/2+1 bins).
/// Wraps FFTW double-precision plans; plan creation is serialized internally,
/// execution is safe from the owning thread. One instance per stream.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  /// Forward transform, X[k] = sum_n x[n] e^{-j2pi kn/N}.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  /// Inverse transform including the 1/N normalization.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  int n_;
  void* plan_fwd_;
  void* plan_inv_;
  double* real_buf_;
  std::complex<double>* cplx_buf_;
};

/// Full linear convolution (size a+b-1) via FFT. Deterministic.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

}  // namespace cdr
