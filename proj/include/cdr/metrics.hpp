#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdr/estimators.hpp"
#include "cdr/filterbank.hpp"
#include "cdr/simulator.hpp"

namespace cdr {

/// Per-(frame,bin) early-to-late power ratio, smoothed with the same
/// lambda-recursion as the coherence path so the ground truth and the CDR
/// estimates see identical averaging.
struct ElrField {
  size_t frames = 0;
  size_t bins = 0;
  std::vector<double> elr_db;   ///< defined where valid
  std::vector<std::uint8_t> valid;
  std::vector<double> early_pow;  ///< smoothed per-bin early power
  std::vector<double> late_pow;   ///< smoothed per-bin late power
  double te = 0.05;

  double at(size_t l, size_t b) const { return elr_db[l * bins + b]; }
};

/// Fraction of the total power below which the late power of a bin is
/// considered too small for a meaningful ratio.
inline constexpr double kElrFloorRatio = 1e-10;

/// ELR field from aligned early/late spectrograms of the same signal.
ElrField elr(const Spectrogram& early, const Spectrogram& late, double lambda,
             double te);

/// Time-averaged per-frequency ELR: 10 log10(sum_l Pe / sum_l Pl).
std::vector<double> elr_per_frequency_db(const ElrField& field);

/// Single number: 10 log10(sum_{l,f} Pe / sum_{l,f} Pl).
double elr_scalar_db(const ElrField& field);

/// CDR field using the ELR as the ground-truth proxy (CDR ~ ELR).
CdrField cdr_field_from_elr(const ElrField& field);

/// Mean squared error between the diffuseness transforms of two CDR fields,
/// over bins valid in both. Always in [0,1].
double diffuseness_mse(const CdrField& truth, const CdrField& estimate);

/// Frequency-weighted segmental SNR. Fixed variant: 23 mel bands over
/// 125..8000 Hz, 25 ms segments with 10 ms hop, band weight = reference band
/// magnitude^0.2, per-segment SNR clipped to [-10, 35] dB, averaged over
/// non-silent reference segments.
struct FwSegSnrOptions {
  int num_bands = 23;
  double f_lo = 125.0;
  double f_hi = 8000.0;
  double segment_s = 0.025;
  double hop_s = 0.010;
  double weight_exponent = 0.2;
  double clip_lo_db = -10.0;
  double clip_hi_db = 35.0;
};

double fwsegsnr(std::span<const double> reference, std::span<const double> test,
                double sample_rate, const FwSegSnrOptions& opt = {});

/// Reverberation time from the Schroeder energy decay curve: linear fit over
/// the -5..-25 dB range extrapolated to -60 dB. Throws if the RIR has no
/// usable decay range.
double t60_from_edc(const ImpulseResponse& rir);

}  // namespace cdr
