#include "cdr/coherence.hpp"

#include <cmath>
#include <stdexcept>

namespace cdr {

CrossSpectra CrossSpectra::zeros(size_t bins, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("CrossSpectra: lambda must be in (0,1)");
  CrossSpectra cs;
  cs.phi11.assign(bins, 0.0);
  cs.phi22.assign(bins, 0.0);
  cs.phi12.assign(bins, {0.0, 0.0});
  cs.lambda = lambda;
  return cs;
}

CrossSpectra update_psd(const CrossSpectra& prev,
                        std::span<const std::complex<double>> x1_frame,
                        std::span<const std::complex<double>> x2_frame) {
  if (!(prev.lambda > 0.0 && prev.lambda < 1.0))
    throw std::invalid_argument("update_psd: lambda must be in (0,1)");
  const size_t n = prev.bins();
  if (x1_frame.size() != n || x2_frame.size() != n)
    throw std::invalid_argument("update_psd: bin count mismatch");

  CrossSpectra out = prev;
  const double lam = prev.lambda;
  const double one_m = 1.0 - lam;
  for (size_t b = 0; b < n; ++b) {
    const std::complex<double> x1 = x1_frame[b];
    const std::complex<double> x2 = x2_frame[b];
    out.phi11[b] = lam * prev.phi11[b] + one_m * std::norm(x1);
    out.phi22[b] = lam * prev.phi22[b] + one_m * std::norm(x2);
    out.phi12[b] = lam * prev.phi12[b] + one_m * (x1 * std::conj(x2));
  }
  return out;
}

namespace {

CoherenceField coherence_from(const std::vector<double>& p11,
                              const std::vector<double>& p22,
                              const std::vector<std::complex<double>>& p12) {
  CoherenceField field;
  const size_t n = p11.size();
  field.gamma.assign(n, {0.0, 0.0});
  field.valid.assign(n, 0);
  for (size_t b = 0; b < n; ++b) {
    if (p11[b] <= kPsdFloor || p22[b] <= kPsdFloor) continue;  // flagged: no energy yet
    std::complex<double> g = p12[b] / std::sqrt(p11[b] * p22[b]);
    const double mag = std::abs(g);
    if (mag > 1.0) g /= mag;  // ulp overshoot of the Cauchy-Schwarz bound
    field.gamma[b] = g;
    field.valid[b] = 1;
  }
  return field;
}

}  // namespace

CoherenceField estimate_coherence(const CrossSpectra& cs) {
  return coherence_from(cs.phi11, cs.phi22, cs.phi12);
}

double tdoa_from_doa(double theta_rad, double mic_distance_m, double sound_speed) {
  if (mic_distance_m <= 0.0 || sound_speed <= 0.0)
    throw std::invalid_argument("tdoa_from_doa: d and c must be positive");
  return mic_distance_m * std::sin(theta_rad) / sound_speed;
}

std::vector<std::complex<double>> model_plane_wave(double tdoa_s,
                                                   std::span<const double> freq_hz) {
  if (!std::isfinite(tdoa_s)) throw std::invalid_argument("model_plane_wave: bad tdoa");
  std::vector<std::complex<double>> g(freq_hz.size());
  for (size_t i = 0; i < freq_hz.size(); ++i) {
    const double phase = 2.0 * M_PI * freq_hz[i] * tdoa_s;
    g[i] = {std::cos(phase), std::sin(phase)};
  }
  return g;
}

std::vector<double> model_diffuse(double mic_distance_m, std::span<const double> freq_hz,
                                  double sound_speed) {
  if (mic_distance_m <= 0.0 || sound_speed <= 0.0)
    throw std::invalid_argument("model_diffuse: d and c must be positive");
  std::vector<double> g(freq_hz.size());
  for (size_t i = 0; i < freq_hz.size(); ++i) {
    const double kd = 2.0 * M_PI * freq_hz[i] * mic_distance_m / sound_speed;
    g[i] = (std::abs(kd) < 1e-12) ? 1.0 : std::sin(kd) / kd;
  }
  return g;
}

std::vector<double> model_2d_isotropic(double mic_distance_m,
                                       std::span<const double> freq_hz,
                                       double sound_speed) {
  if (mic_distance_m <= 0.0 || sound_speed <= 0.0)
    throw std::invalid_argument("model_2d_isotropic: d and c must be positive");
  std::vector<double> g(freq_hz.size());
  for (size_t i = 0; i < freq_hz.size(); ++i) {
    const double kd = 2.0 * M_PI * freq_hz[i] * mic_distance_m / sound_speed;
    g[i] = std::cyl_bessel_j(0, std::abs(kd));
  }
  return g;
}

std::complex<double> mix_coherence(double cdr, std::complex<double> gamma_s,
                                   double gamma_n) {
  if (!(cdr >= 0.0)) throw std::invalid_argument("mix_coherence: cdr must be >= 0");
  if (std::isinf(cdr)) return gamma_s;
  return gamma_s + (std::complex<double>(gamma_n, 0.0) - gamma_s) / (cdr + 1.0);
}

CoherenceModels CoherenceModels::make(std::span<const double> freq_hz,
                                      double mic_distance, double sound_speed,
                                      double tdoa, NoiseModel noise) {
  CoherenceModels m;
  m.mic_distance = mic_distance;
  m.sound_speed = sound_speed;
  m.tdoa = tdoa;
  m.freq_hz.assign(freq_hz.begin(), freq_hz.end());
  m.gamma_s = model_plane_wave(tdoa, freq_hz);
  m.gamma_n = (noise == NoiseModel::kDiffuse)
                  ? model_diffuse(mic_distance, freq_hz, sound_speed)
                  : model_2d_isotropic(mic_distance, freq_hz, sound_speed);
  return m;
}

CrossSpectra average_cross_spectra(const Spectrogram& a, const Spectrogram& b) {
  if (a.bins != b.bins || a.frames != b.frames)
    throw std::invalid_argument("average_cross_spectra: shape mismatch");
  if (a.frames == 0) throw std::invalid_argument("average_cross_spectra: no frames");
  CrossSpectra cs = CrossSpectra::zeros(a.bins, 0.5);
  for (size_t l = 0; l < a.frames; ++l) {
    for (size_t k = 0; k < a.bins; ++k) {
      const std::complex<double> x1 = a.at(l, k);
      const std::complex<double> x2 = b.at(l, k);
      cs.phi11[k] += std::norm(x1);
      cs.phi22[k] += std::norm(x2);
      cs.phi12[k] += x1 * std::conj(x2);
    }
  }
  const double inv = 1.0 / static_cast<double>(a.frames);
  for (size_t k = 0; k < a.bins; ++k) {
    cs.phi11[k] *= inv;
    cs.phi22[k] *= inv;
    cs.phi12[k] *= inv;
  }
  return cs;
}

}  // namespace cdr
