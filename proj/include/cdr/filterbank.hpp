#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cdr {

/// DFT-based uniform analysis/synthesis filterbank (weighted overlap-add,
/// window length >= FFT size, time-domain folding before the transform).
struct FilterbankConfig {
  double sample_rate = 16000.0;
  int window_len = 1024;  ///< prototype length, integer multiple of fft_size
  int fft_size = 512;     ///< transform length; hop must divide it
  int hop = 128;          ///< downsampling factor
  std::vector<double> prototype;  ///< filled by design_prototype(); may be empty

  int bins() const { return fft_size / 2 + 1; }
  /// Physical frequency of bin b in Hz.
  double bin_freq(int b) const { return b * sample_rate / fft_size; }
  /// Center frequency of every one-sided bin.
  std::vector<double> freq_grid() const;
};

/// One-sided complex STFT-domain signal. Row-major frames x bins.
struct Spectrogram {
  size_t frames = 0;
  size_t bins = 0;
  std::vector<std::complex<double>> data;
  FilterbankConfig config;
  size_t source_len = 0;  ///< original signal length, for exact-length synthesis

  std::complex<double>& at(size_t frame, size_t bin) { return data[frame * bins + bin]; }
  const std::complex<double>& at(size_t frame, size_t bin) const {
    return data[frame * bins + bin];
  }
  std::span<const std::complex<double>> frame(size_t l) const {
    return {data.data() + l * bins, bins};
  }
  std::span<std::complex<double>> frame(size_t l) {
    return {data.data() + l * bins, bins};
  }
};

/// Lowpass prototype for the analysis/synthesis pair: Kaiser-windowed sinc
/// (cutoff pi/fft_size) with a per-polyphase-leg correction that cancels the
/// folding alias exactly, giving perfect reconstruction up to rounding.
/// The degenerate window_len == fft_size case returns a rectangular window.
/// Throws std::invalid_argument for invalid length relationships.
std::vector<double> design_prototype(const FilterbankConfig& config);

/// Number of analysis frames produced for a signal of the given length.
/// Analysis prepends window_len - hop zeros and zero-pads the tail so every
/// input sample has full overlap-add coverage:
///   frames = floor((len + window_len - hop - 1) / hop) + 1.
size_t analysis_frames(size_t signal_len, const FilterbankConfig& config);

/// Analyze a real signal into the one-sided STFT domain.
/// Frame l covers padded positions [l*hop, l*hop + window_len).
Spectrogram analyze(std::span<const double> signal, const FilterbankConfig& config);

/// Weighted overlap-add synthesis with the same prototype. Output is aligned
/// with the analyzed signal (zero net delay) and trimmed to source_len.
std::vector<double> synthesize(const Spectrogram& spec, const FilterbankConfig& config);

}  // namespace cdr
