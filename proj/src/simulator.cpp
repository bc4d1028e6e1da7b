#include "cdr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cdr/fft.hpp"
#include "cdr/rng.hpp"

namespace cdr {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

double ipow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void RoomSpec::validate() const {
  if (!(dims.x > 0 && dims.y > 0 && dims.z > 0))
    throw std::invalid_argument("RoomSpec: dimensions must be positive");
  for (double b : beta)
    if (!(b >= 0.0 && b < 1.0))
      throw std::invalid_argument("RoomSpec: beta must be in [0,1)");
  auto inside = [&](const Vec3& p) {
    return p.x > 0 && p.x < dims.x && p.y > 0 && p.y < dims.y && p.z > 0 &&
           p.z < dims.z;
  };
  if (!inside(source_pos))
    throw std::invalid_argument("RoomSpec: source outside room");
  if (mic_positions.empty())
    throw std::invalid_argument("RoomSpec: no microphones");
  for (const Vec3& m : mic_positions) {
    if (!inside(m)) throw std::invalid_argument("RoomSpec: microphone outside room");
    if (distance(m, source_pos) < 1e-3)
      throw std::invalid_argument("RoomSpec: microphone coincides with source");
  }
  if (!(sample_rate > 0) || !(sound_speed > 0))
    throw std::invalid_argument("RoomSpec: sample_rate and sound_speed must be positive");
}

void add_fractional_impulse(std::vector<double>& buf, double t0_samples,
                            double amplitude) {
  const int half = kSincTaps / 2;  // 40
  const int first = static_cast<int>(std::ceil(t0_samples)) - half;
  for (int n = first; n < first + kSincTaps; ++n) {
    if (n < 0 || n >= static_cast<int>(buf.size())) continue;
    const double t = n - t0_samples;
    const double w = 0.5 * (1.0 + std::cos(kPi * t / (half + 0.5)));
    buf[n] += amplitude * w * sinc(t);
  }
}

std::vector<double> delay_signal(std::span<const double> x, double delay_samples) {
  std::vector<double> y(x.size(), 0.0);
  const int half = kSincTaps / 2;
  const int first = static_cast<int>(std::ceil(delay_samples)) - half;
  for (int k = first; k < first + kSincTaps; ++k) {
    const double t = k - delay_samples;
    const double w = 0.5 * (1.0 + std::cos(kPi * t / (half + 0.5)));
    const double coeff = w * sinc(t);
    if (coeff == 0.0) continue;
    // y[n] += coeff * x[n - k]
    const int n_begin = std::max(0, k);
    const int n_end = std::min<int>(x.size(), static_cast<int>(x.size()) + k);
    for (int n = n_begin; n < n_end; ++n) y[n] += coeff * x[n - k];
  }
  return y;
}

ImpulseResponse simulate_rir(const RoomSpec& room, size_t mic_index,
                             double stop_threshold_db) {
  room.validate();
  if (mic_index >= room.mic_positions.size())
    throw std::invalid_argument("simulate_rir: mic index out of range");
  if (!(stop_threshold_db > 0))
    throw std::invalid_argument("simulate_rir: stop threshold must be positive");

  const Vec3 r = room.mic_positions[mic_index];
  const Vec3 s = room.source_pos;
  const double fs = room.sample_rate;
  const double c = room.sound_speed;

  const double direct_dist = distance(s, r);
  const double direct_amp = 1.0 / (4.0 * kPi * direct_dist);
  const double cutoff_amp = direct_amp * std::pow(10.0, -stop_threshold_db / 20.0);

  struct Image {
    double dist;
    double amp;
  };
  std::vector<Image> images;
  double max_dist = direct_dist;

  // Expand cubic shells of the image lattice until a whole shell contributes
  // nothing above the cutoff.
  const int hard_cap = 200;
  int idle_shells = 0;
  for (int order = 0; order <= hard_cap && idle_shells < 2; ++order) {
    bool any = false;
    for (int nx = -order; nx <= order; ++nx) {
      for (int ny = -order; ny <= order; ++ny) {
        for (int nz = -order; nz <= order; ++nz) {
          if (std::max({std::abs(nx), std::abs(ny), std::abs(nz)}) != order)
            continue;  // shell only
          for (int px = 0; px <= 1; ++px) {
            for (int py = 0; py <= 1; ++py) {
              for (int pz = 0; pz <= 1; ++pz) {
                const Vec3 img{(1 - 2 * px) * s.x + 2.0 * nx * room.dims.x,
                               (1 - 2 * py) * s.y + 2.0 * ny * room.dims.y,
                               (1 - 2 * pz) * s.z + 2.0 * nz * room.dims.z};
                const double dist = distance(img, r);
                const double refl = ipow(room.beta[0], std::abs(nx - px)) *
                                    ipow(room.beta[1], std::abs(nx)) *
                                    ipow(room.beta[2], std::abs(ny - py)) *
                                    ipow(room.beta[3], std::abs(ny)) *
                                    ipow(room.beta[4], std::abs(nz - pz)) *
                                    ipow(room.beta[5], std::abs(nz));
                const double amp = refl / (4.0 * kPi * std::max(dist, 1e-3));
                if (amp < cutoff_amp) continue;
                images.push_back({dist, amp});
                max_dist = std::max(max_dist, dist);
                any = true;
              }
            }
          }
        }
      }
    }
    idle_shells = any ? 0 : idle_shells + 1;
  }

  ImpulseResponse rir;
  rir.sample_rate = fs;
  const size_t len = static_cast<size_t>(std::ceil(max_dist / c * fs)) + kSincTaps +
                     static_cast<size_t>(std::round(rir.split_te * fs));
  rir.samples.assign(len, 0.0);
  // Fixed summation order keeps the result deterministic.
  std::sort(images.begin(), images.end(), [](const Image& a, const Image& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.amp < b.amp;
  });
  for (const Image& im : images)
    add_fractional_impulse(rir.samples, im.dist / c * fs, im.amp);
  return rir;
}

size_t direct_path_peak(const ImpulseResponse& rir) {
  if (rir.samples.empty()) throw std::invalid_argument("direct_path_peak: empty RIR");
  size_t best = 0;
  double best_val = -1.0;
  for (size_t i = 0; i < rir.samples.size(); ++i) {
    const double v = std::abs(rir.samples[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

std::pair<ImpulseResponse, ImpulseResponse> split_rir(const ImpulseResponse& rir,
                                                      double te) {
  if (!(te >= 0.0)) throw std::invalid_argument("split_rir: te must be >= 0");
  if (rir.samples.empty()) throw std::invalid_argument("split_rir: empty RIR");
  const size_t peak = direct_path_peak(rir);
  const size_t lobe = kSincTaps / 2 + 1;  // keep the whole direct lobe early
  const size_t split = std::min(
      rir.samples.size(),
      peak + lobe + static_cast<size_t>(std::round(te * rir.sample_rate)));

  ImpulseResponse early = rir, late = rir;
  early.split_te = te;
  late.split_te = te;
  std::fill(early.samples.begin() + split, early.samples.end(), 0.0);
  std::fill(late.samples.begin(), late.samples.begin() + split, 0.0);
  return {early, late};
}

namespace {

std::vector<Vec3> field_directions(IsotropicField field, int n) {
  std::vector<Vec3> dirs(n);
  if (field == IsotropicField::kSpherical) {
    // Fibonacci sphere lattice: deterministic, low discrepancy.
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / n;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * i;
      dirs[i] = {rho * std::cos(a), rho * std::sin(a), z};
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * kPi * i / n;
      dirs[i] = {std::cos(a), std::sin(a), 0.0};
    }
  }
  return dirs;
}

}  // namespace

std::vector<std::vector<double>> synthesize_isotropic(
    IsotropicField field, int num_sources, std::span<const Vec3> mic_positions,
    double duration_s, double sample_rate, double sound_speed, std::uint64_t seed) {
  if (num_sources < 16)
    throw std::invalid_argument("synthesize_isotropic: need at least 16 sources");
  if (!(duration_s > 0))
    throw std::invalid_argument("synthesize_isotropic: duration must be positive");
  if (mic_positions.empty())
    throw std::invalid_argument("synthesize_isotropic: no microphones");

  const size_t len = static_cast<size_t>(std::llround(duration_s * sample_rate));
  const size_t n_ch = mic_positions.size();

  // Delays relative to the array centroid.
  Vec3 centroid{};
  for (const Vec3& m : mic_positions) {
    centroid.x += m.x;
    centroid.y += m.y;
    centroid.z += m.z;
  }
  centroid.x /= n_ch;
  centroid.y /= n_ch;
  centroid.z /= n_ch;

  const std::vector<Vec3> dirs = field_directions(field, num_sources);
  const double scale = 1.0 / std::sqrt(static_cast<double>(num_sources));

  std::vector<std::vector<double>> out(n_ch, std::vector<double>(len, 0.0));
  Rng rng(seed);
  std::vector<double> noise(len);
  const int half = kSincTaps / 2;
  for (int i = 0; i < num_sources; ++i) {
    for (size_t t = 0; t < len; ++t) noise[t] = scale * rng.gaussian();
    for (size_t ch = 0; ch < n_ch; ++ch) {
      const Vec3& m = mic_positions[ch];
      const Vec3 rel{m.x - centroid.x, m.y - centroid.y, m.z - centroid.z};
      // Plane wave from direction u arrives earlier at mics in front:
      // tau = -(u . r)/c.
      const double proj = dirs[i].x * rel.x + dirs[i].y * rel.y + dirs[i].z * rel.z;
      const double delay = -proj / sound_speed * sample_rate;
      std::vector<double>& y = out[ch];
      const int first = static_cast<int>(std::ceil(delay)) - half;
      for (int k = first; k < first + kSincTaps; ++k) {
        const double t = k - delay;
        const double w = 0.5 * (1.0 + std::cos(kPi * t / (half + 0.5)));
        const double coeff = w * sinc(t);
        const int n_begin = std::max(0, k);
        const int n_end = std::min<int>(len, static_cast<int>(len) + k);
        for (int n = n_begin; n < n_end; ++n) y[n] += coeff * noise[n - k];
      }
    }
  }
  return out;
}

std::vector<double> third_octave_centers() {
  std::vector<double> f;
  for (double fc = 125.0; fc < 8000.0 * 1.0001; fc *= std::pow(2.0, 1.0 / 3.0))
    f.push_back(fc);
  return f;
}

namespace {

double band_power(const std::vector<std::complex<double>>& spec, double bin_hz,
                  double f_lo, double f_hi) {
  double p = 0.0;
  for (size_t k = 0; k < spec.size(); ++k) {
    const double f = k * bin_hz;
    if (f >= f_lo && f < f_hi) p += std::norm(spec[k]);
  }
  return p;
}

double signal_power(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return x.empty() ? 0.0 : p / x.size();
}

}  // namespace

MixtureResult make_mixture(std::span<const double> clean, double doa_rad,
                           double target_cdr_db, double mic_distance,
                           double sound_speed, double sample_rate,
                           std::uint64_t seed,
                           const std::optional<std::vector<double>>& band_targets_db) {
  if (clean.empty()) throw std::invalid_argument("make_mixture: empty clean signal");
  if (!std::isfinite(target_cdr_db) && !std::isinf(target_cdr_db))
    throw std::invalid_argument("make_mixture: bad CDR target");

  const double dt = mic_distance * std::sin(doa_rad) / sound_speed;
  // Positive TDOA: channel 2 lags channel 1.
  std::vector<double> s1 = delay_signal(clean, -0.5 * dt * sample_rate);
  std::vector<double> s2 = delay_signal(clean, +0.5 * dt * sample_rate);

  const std::vector<Vec3> mics{{-mic_distance / 2, 0, 0}, {mic_distance / 2, 0, 0}};
  auto noise = synthesize_isotropic(IsotropicField::kSpherical, 360, mics,
                                    clean.size() / sample_rate, sample_rate,
                                    sound_speed, seed);
  noise[0].resize(clean.size(), 0.0);
  noise[1].resize(clean.size(), 0.0);

  const double ps = 0.5 * (signal_power(s1) + signal_power(s2));
  double pn = 0.5 * (signal_power(noise[0]) + signal_power(noise[1]));
  if (pn <= 0.0) throw std::runtime_error("make_mixture: degenerate noise");

  const auto centers = third_octave_centers();
  if (band_targets_db && band_targets_db->size() != centers.size())
    throw std::invalid_argument("make_mixture: need one target per third-octave band");

  if (band_targets_db) {
    // Shape the noise per band so each band hits its own CDR target.
    const size_t n = clean.size();
    size_t nfft = 1;
    while (nfft < n) nfft <<= 1;
    RealFft fft(static_cast<int>(nfft));
    const double bin_hz = sample_rate / nfft;
    std::vector<double> padded(nfft, 0.0);
    std::vector<std::complex<double>> S(fft.bins()), N1(fft.bins()), N2(fft.bins());
    std::copy(s1.begin(), s1.end(), padded.begin());
    fft.forward(padded, S);
    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy(noise[0].begin(), noise[0].end(), padded.begin());
    fft.forward(padded, N1);
    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy(noise[1].begin(), noise[1].end(), padded.begin());
    fft.forward(padded, N2);

    std::vector<double> gain(fft.bins(), 1.0);
    for (size_t b = 0; b < centers.size(); ++b) {
      const double f_lo = centers[b] * std::pow(2.0, -1.0 / 6.0);
      const double f_hi = centers[b] * std::pow(2.0, 1.0 / 6.0);
      const double ps_band = band_power(S, bin_hz, f_lo, f_hi);
      const double pn_band =
          0.5 * (band_power(N1, bin_hz, f_lo, f_hi) + band_power(N2, bin_hz, f_lo, f_hi));
      if (pn_band <= 0.0) continue;
      const double target = std::pow(10.0, (*band_targets_db)[b] / 10.0);
      const double g = std::sqrt(ps_band / (pn_band * target));
      for (size_t k = 0; k < gain.size(); ++k) {
        const double f = k * bin_hz;
        if (f >= f_lo && f < f_hi) gain[k] = g;
      }
    }
    for (int k = 0; k < fft.bins(); ++k) {
      N1[k] *= gain[k];
      N2[k] *= gain[k];
    }
    std::vector<double> tmp(nfft);
    fft.inverse(N1, tmp);
    std::copy(tmp.begin(), tmp.begin() + n, noise[0].begin());
    fft.inverse(N2, tmp);
    std::copy(tmp.begin(), tmp.begin() + n, noise[1].begin());
  } else {
    double g;
    if (std::isinf(target_cdr_db) && target_cdr_db > 0) {
      g = 0.0;  // pure delayed clean signal
    } else if (std::isinf(target_cdr_db)) {
      g = std::sqrt(ps / pn);  // pure noise at the clean signal's level
      s1.assign(s1.size(), 0.0);
      s2.assign(s2.size(), 0.0);
    } else {
      const double target = std::pow(10.0, target_cdr_db / 10.0);
      g = std::sqrt(ps / (pn * target));
    }
    for (auto& ch : noise)
      for (double& v : ch) v *= g;
  }

  MixtureResult res;
  res.x1.resize(clean.size());
  res.x2.resize(clean.size());
  for (size_t i = 0; i < clean.size(); ++i) {
    res.x1[i] = s1[i] + noise[0][i];
    res.x2[i] = s2[i] + noise[1][i];
  }

  // Realized per-band CDR from the separate components.
  {
    const size_t n = clean.size();
    size_t nfft = 1;
    while (nfft < n) nfft <<= 1;
    RealFft fft(static_cast<int>(nfft));
    const double bin_hz = sample_rate / nfft;
    std::vector<double> padded(nfft, 0.0);
    std::vector<std::complex<double>> S1(fft.bins()), S2(fft.bins()), N1(fft.bins()),
        N2(fft.bins());
    auto load = [&](std::span<const double> x, std::vector<std::complex<double>>& out) {
      std::fill(padded.begin(), padded.end(), 0.0);
      std::copy(x.begin(), x.end(), padded.begin());
      fft.forward(padded, out);
    };
    load(s1, S1);
    load(s2, S2);
    load(noise[0], N1);
    load(noise[1], N2);
    for (double fc : centers) {
      const double f_lo = fc * std::pow(2.0, -1.0 / 6.0);
      const double f_hi = fc * std::pow(2.0, 1.0 / 6.0);
      const double ps_band =
          0.5 * (band_power(S1, bin_hz, f_lo, f_hi) + band_power(S2, bin_hz, f_lo, f_hi));
      const double pn_band =
          0.5 * (band_power(N1, bin_hz, f_lo, f_hi) + band_power(N2, bin_hz, f_lo, f_hi));
      BandCdr bc;
      bc.f_lo = f_lo;
      bc.f_hi = f_hi;
      if (pn_band <= 0.0)
        bc.cdr_db = std::numeric_limits<double>::infinity();
      else if (ps_band <= 0.0)
        bc.cdr_db = -std::numeric_limits<double>::infinity();
      else
        bc.cdr_db = 10.0 * std::log10(ps_band / pn_band);
      res.realized_cdr.push_back(bc);
    }
  }
  return res;
}

ReverbMixture reverberant_mixture(std::span<const double> clean,
                                  const ImpulseResponse& rir1,
                                  const ImpulseResponse& rir2, double te) {
  if (clean.empty()) throw std::invalid_argument("reverberant_mixture: empty signal");
  auto [e1, l1] = split_rir(rir1, te);
  auto [e2, l2] = split_rir(rir2, te);

  ReverbMixture m;
  m.early1 = fft_convolve(clean, e1.samples);
  m.early2 = fft_convolve(clean, e2.samples);
  m.late1 = fft_convolve(clean, l1.samples);
  m.late2 = fft_convolve(clean, l2.samples);
  const size_t len = std::max(m.early1.size(), m.early2.size());
  for (auto* v : {&m.early1, &m.early2, &m.late1, &m.late2})
    v->resize(len, 0.0);
  m.x1.resize(len);
  m.x2.resize(len);
  for (size_t i = 0; i < len; ++i) {
    m.x1[i] = m.early1[i] + m.late1[i];  // additivity holds exactly by construction
    m.x2[i] = m.early2[i] + m.late2[i];
  }
  return m;
}

std::vector<double> speech_like(double duration_s, double sample_rate,
                                std::uint64_t seed) {
  if (!(duration_s > 0)) throw std::invalid_argument("speech_like: bad duration");
  const size_t len = static_cast<size_t>(std::llround(duration_s * sample_rate));
  std::vector<double> x(len, 0.0);
  Rng rng(seed);

  auto resonate = [&](std::vector<double>& seg, double fc, double bw) {
    // two-pole resonator
    const double r = std::exp(-kPi * bw / sample_rate);
    const double a1 = 2.0 * r * std::cos(2.0 * kPi * fc / sample_rate);
    const double a2 = -r * r;
    double y1 = 0, y2 = 0;
    for (double& v : seg) {
      const double y = v + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      v = y;
    }
  };
  auto normalize_rms = [&](std::vector<double>& seg, double target) {
    double p = 0;
    for (double v : seg) p += v * v;
    if (p <= 0) return;
    const double g = target / std::sqrt(p / seg.size());
    for (double& v : seg) v *= g;
  };

  size_t pos = 0;
  while (pos < len) {
    const double kind = rng.uniform();
    if (kind < 0.18) {  // pause
      pos += static_cast<size_t>((0.05 + 0.25 * rng.uniform()) * sample_rate);
      continue;
    }
    const bool voiced = kind < 0.75;
    const double dur = voiced ? 0.12 + 0.28 * rng.uniform() : 0.04 + 0.10 * rng.uniform();
    const size_t n = std::min<size_t>(len - pos, static_cast<size_t>(dur * sample_rate));
    if (n < 32) break;
    std::vector<double> seg(n, 0.0);
    if (voiced) {
      double f0 = 90.0 + 130.0 * rng.uniform();
      double phase = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double vib = 1.0 + 0.02 * std::sin(2.0 * kPi * 5.0 * i / sample_rate);
        phase += f0 * vib / sample_rate;
        if (phase >= 1.0) {
          phase -= 1.0;
          seg[i] = 1.0;  // glottal pulse train
        }
      }
      resonate(seg, 250.0 + 500.0 * rng.uniform(), 90.0);
      resonate(seg, 900.0 + 1400.0 * rng.uniform(), 140.0);
      resonate(seg, 2400.0 + 900.0 * rng.uniform(), 220.0);
      for (double& v : seg) v += 0.002 * rng.gaussian();
    } else {
      for (double& v : seg) v = rng.gaussian();
      resonate(seg, 1500.0 + 4500.0 * rng.uniform(), 900.0);
    }
    // syllabic envelope with attack/decay
    const size_t ramp = std::min<size_t>(n / 4, static_cast<size_t>(0.02 * sample_rate));
    for (size_t i = 0; i < ramp; ++i) {
      const double w = 0.5 * (1.0 - std::cos(kPi * i / ramp));
      seg[i] *= w;
      seg[n - 1 - i] *= w;
    }
    normalize_rms(seg, voiced ? 0.25 * std::pow(10.0, 0.3 * (rng.uniform() - 0.5))
                              : 0.12 * std::pow(10.0, 0.3 * (rng.uniform() - 0.5)));
    for (size_t i = 0; i < n; ++i) x[pos + i] += seg[i];
    pos += n + static_cast<size_t>(0.01 * sample_rate * rng.uniform());
  }
  return x;
}

}  // namespace cdr
