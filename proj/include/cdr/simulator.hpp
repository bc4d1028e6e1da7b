#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace cdr {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

double distance(const Vec3& a, const Vec3& b);

/// Rectangular room with per-surface pressure reflection coefficients.
/// beta order: x=0, x=Lx, y=0, y=Ly, z=0 (floor), z=Lz (ceiling).
struct RoomSpec {
  Vec3 dims{4.0, 3.0, 2.5};
  std::array<double, 6> beta{0.9, 0.9, 0.9, 0.9, 0.9, 0.9};
  Vec3 source_pos;
  std::vector<Vec3> mic_positions;
  double sample_rate = 16000.0;
  double sound_speed = 343.0;

  /// Throws std::invalid_argument if positions are not strictly inside the
  /// room or any beta is outside [0, 1).
  void validate() const;
};

struct ImpulseResponse {
  std::vector<double> samples;
  double sample_rate = 16000.0;
  double split_te = 0.05;  ///< early/late boundary in seconds
};

/// Number of taps of the windowed-sinc interpolation used for fractional
/// delays (image sources and plane-wave rendering).
inline constexpr int kSincTaps = 81;

/// Add an amplitude-scaled band-limited impulse centered at the fractional
/// sample position t0 to buf (Hann-windowed sinc, kSincTaps wide).
void add_fractional_impulse(std::vector<double>& buf, double t0_samples,
                            double amplitude);

/// Delay a signal by a (possibly negative, fractional) number of samples,
/// same length, windowed-sinc interpolation.
std::vector<double> delay_signal(std::span<const double> x, double delay_samples);

/// Image-method RIR for one microphone. Images weaker than stop_threshold_db
/// below the direct-path peak are truncated. Deterministic.
ImpulseResponse simulate_rir(const RoomSpec& room, size_t mic_index,
                             double stop_threshold_db = 60.0);

/// Index of the direct-path peak (maximum absolute sample).
size_t direct_path_peak(const ImpulseResponse& rir);

/// Split into early and late parts, both zero-padded to the input length so
/// early + late reconstructs the input exactly. The boundary is placed
/// te seconds after the direct-path lobe (peak + half interpolation lobe).
std::pair<ImpulseResponse, ImpulseResponse> split_rir(const ImpulseResponse& rir,
                                                      double te);

enum class IsotropicField { kSpherical, kCylindrical };

/// Isotropic noise field: superposition of independent white plane waves from
/// num_sources directions (Fibonacci sphere lattice or uniform horizontal
/// circle). Returns one channel per microphone. Reproducible from seed.
std::vector<std::vector<double>> synthesize_isotropic(
    IsotropicField field, int num_sources, std::span<const Vec3> mic_positions,
    double duration_s, double sample_rate, double sound_speed, std::uint64_t seed);

/// Realized coherent-to-diffuse ratio of one frequency band.
struct BandCdr {
  double f_lo = 0, f_hi = 0;
  double cdr_db = 0;
};

struct MixtureResult {
  std::vector<double> x1, x2;
  std::vector<BandCdr> realized_cdr;
};

/// Plane-wave rendered clean signal plus spherically isotropic noise scaled
/// for the requested broadband CDR (+/-inf give the pure components). When
/// band_targets_db is set, the noise is shaped per one-third-octave band
/// (19 bands, 125..8000 Hz) to meet per-band targets.
MixtureResult make_mixture(std::span<const double> clean, double doa_rad,
                           double target_cdr_db, double mic_distance,
                           double sound_speed, double sample_rate,
                           std::uint64_t seed,
                           const std::optional<std::vector<double>>&
                               band_targets_db = std::nullopt);

/// Center frequencies of the one-third-octave bands used by make_mixture.
std::vector<double> third_octave_centers();

struct ReverbMixture {
  std::vector<double> x1, x2;          ///< x_i = early_i + late_i (exact)
  std::vector<double> early1, early2;  ///< early RIR part convolved with clean
  std::vector<double> late1, late2;    ///< late RIR part convolved with clean
};

/// Convolve a clean signal with an RIR pair and with the early/late splits.
ReverbMixture reverberant_mixture(std::span<const double> clean,
                                  const ImpulseResponse& rir1,
                                  const ImpulseResponse& rir2, double te);

/// Nonstationary speech-shaped test signal: voiced segments (pulse train
/// through moving resonators), unvoiced noise bursts, and pauses.
std::vector<double> speech_like(double duration_s, double sample_rate,
                                std::uint64_t seed);

}  // namespace cdr
