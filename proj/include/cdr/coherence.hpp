#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "cdr/filterbank.hpp"

namespace cdr {

/// Auto/auto/cross power spectra for one frame, recursively averaged:
/// phi(l) = lambda*phi(l-1) + (1-lambda)*X_i X_j^*. All three share lambda,
/// which guarantees |phi12|^2 <= phi11*phi22 and coherence magnitude <= 1.
struct CrossSpectra {
  std::vector<double> phi11;
  std::vector<double> phi22;
  std::vector<std::complex<double>> phi12;
  double lambda = 0.68;

  static CrossSpectra zeros(size_t bins, double lambda);
  size_t bins() const { return phi11.size(); }
};

/// Short-time complex coherence per bin, magnitude clamped to 1. Bins where
/// either auto-spectrum is below the startup floor are flagged invalid and
/// carry gamma = 0.
struct CoherenceField {
  std::vector<std::complex<double>> gamma;
  std::vector<std::uint8_t> valid;
  size_t bins() const { return gamma.size(); }
};

/// Auto-spectrum floor (relative to full scale 1.0) below which the coherence
/// of a bin is considered undefined.
inline constexpr double kPsdFloor = 1e-12;

/// One recursion step of the averaged spectra. Throws if lambda is outside
/// (0,1) or the bin counts disagree.
CrossSpectra update_psd(const CrossSpectra& prev,
                        std::span<const std::complex<double>> x1_frame,
                        std::span<const std::complex<double>> x2_frame);

CoherenceField estimate_coherence(const CrossSpectra& cs);

/// Time difference of arrival for a plane wave: d*sin(theta)/c.
double tdoa_from_doa(double theta_rad, double mic_distance_m, double sound_speed);

/// Plane-wave (direct path) coherence e^{j 2 pi f dt}, unit magnitude.
std::vector<std::complex<double>> model_plane_wave(double tdoa_s,
                                                   std::span<const double> freq_hz);

/// Diffuse (spherically isotropic) field coherence sin(kd)/(kd).
std::vector<double> model_diffuse(double mic_distance_m, std::span<const double> freq_hz,
                                  double sound_speed);

/// 2D (cylindrically isotropic) field coherence J0(kd).
std::vector<double> model_2d_isotropic(double mic_distance_m,
                                       std::span<const double> freq_hz,
                                       double sound_speed);

/// Coherence of a coherent/diffuse mixture at the given power ratio:
/// gamma_s + (gamma_n - gamma_s)/(cdr+1). Forward oracle for the estimators.
std::complex<double> mix_coherence(double cdr, std::complex<double> gamma_s,
                                   double gamma_n);

enum class NoiseModel { kDiffuse, k2dIsotropic };

/// Per-bin coherence models for a microphone pair.
struct CoherenceModels {
  double mic_distance = 0.08;
  double sound_speed = 343.0;
  double tdoa = 0.0;
  std::vector<double> freq_hz;
  std::vector<std::complex<double>> gamma_s;  ///< unit magnitude
  std::vector<double> gamma_n;                ///< real, in [-1, 1]

  static CoherenceModels make(std::span<const double> freq_hz, double mic_distance,
                              double sound_speed, double tdoa,
                              NoiseModel noise = NoiseModel::kDiffuse);
};

/// Uniform (non-recursive) average of the spectra of two aligned spectrograms
/// over all frames; the long-observation estimate used for coherence-vs-model
/// comparisons. Returns a CrossSpectra with lambda unused (set to 0.5).
CrossSpectra average_cross_spectra(const Spectrogram& a, const Spectrogram& b);

}  // namespace cdr
