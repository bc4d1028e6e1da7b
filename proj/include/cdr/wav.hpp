#pragma once

#include <string>
#include <vector>

namespace cdr {

/// Multichannel audio with samples normalized to [-1, 1] doubles.
struct WavData {
  double sample_rate = 16000.0;
  int bit_depth = 16;     ///< 16, 24 (PCM) or 32 (IEEE float)
  bool is_float = false;
  std::vector<std::vector<double>> channels;

  size_t num_frames() const { return channels.empty() ? 0 : channels[0].size(); }
  size_t num_channels() const { return channels.size(); }
};

/// Reads 16/24-bit PCM and 32-bit float WAV (plain or extensible header).
/// Throws std::runtime_error on malformed or unsupported files.
WavData read_wav(const std::string& path);

/// Writes at data.bit_depth / data.is_float; PCM samples are clipped to
/// full scale.
void write_wav(const std::string& path, const WavData& data);

}  // namespace cdr
