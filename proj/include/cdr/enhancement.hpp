#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "cdr/coherence.hpp"
#include "cdr/estimators.hpp"
#include "cdr/filterbank.hpp"

namespace cdr {

/// Configuration of the CDR-driven magnitude-subtraction postfilter.
struct PostfilterConfig {
  double mu = 1.3;       ///< oversubtraction factor
  double g_min = 0.1;    ///< gain floor
  double lambda = 0.68;  ///< forgetting factor of the PSD recursion
  Estimator estimator = Estimator::kProp2;
  NoiseModel noise_model = NoiseModel::kDiffuse;
  std::optional<double> tdoa;  ///< seconds; required by the DOA-dependent estimators
  double mic_distance = 0.08;
  double sound_speed = 343.0;

  /// Throws std::invalid_argument on inconsistent settings. prop3 is fully
  /// blind: supplying a TDOA for it is rejected.
  void validate() const;
};

/// Spatial preprocessor: averaged squared magnitudes, phase of channel 1:
/// Y = 1/2 sqrt(|X1|^2 + |X2|^2) e^{j arg X1}.
std::vector<std::complex<double>> preprocess_frame(
    std::span<const std::complex<double>> x1_frame,
    std::span<const std::complex<double>> x2_frame);

/// Postfilter gain via spectral magnitude subtraction:
/// max(g_min, 1 - sqrt(mu/(cdr+1))). cdr = +inf gives 1.
double postfilter_gain(double cdr, const PostfilterConfig& cfg);

/// Per-(frame,bin) diagnostics of a pipeline run.
struct Telemetry {
  size_t frames = 0;
  size_t bins = 0;
  std::vector<double> cdr;   ///< row-major, extended nonneg real
  std::vector<double> gain;  ///< in [g_min, 1]
  std::vector<std::uint8_t> valid;
  std::vector<double> freq_hz;

  double gain_at(size_t l, size_t b) const { return gain[l * bins + b]; }
};

struct DereverbResult {
  std::vector<double> output;  ///< enhanced mono signal, same length as input
  Telemetry telemetry;
  size_t frames = 0;
  double mean_gain = 0.0;
  int delay_samples = 0;  ///< net pipeline delay (analysis padding compensated)
};

/// Full two-channel dereverberation pipeline: preprocessor, recursive
/// coherence estimation, CDR estimate, magnitude-subtraction gain, synthesis.
/// Set want_telemetry to collect per-bin CDR/gain (large for long inputs).
DereverbResult dereverberate(std::span<const double> x1, std::span<const double> x2,
                             const PostfilterConfig& cfg,
                             const FilterbankConfig& fb_cfg,
                             bool want_telemetry = false);

/// Apply an existing gain field to a spectrogram (used to process early/late
/// signal components with the gains computed from the full mixture).
Spectrogram apply_gains(const Spectrogram& spec, const Telemetry& telemetry);

/// Preprocess a whole spectrogram pair frame by frame.
Spectrogram preprocess(const Spectrogram& x1, const Spectrogram& x2);

}  // namespace cdr
