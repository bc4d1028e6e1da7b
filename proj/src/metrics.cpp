#include "cdr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cdr/fft.hpp"

namespace cdr {

ElrField elr(const Spectrogram& early, const Spectrogram& late, double lambda,
             double te) {
  if (early.frames != late.frames || early.bins != late.bins)
    throw std::invalid_argument("elr: spectrogram shape mismatch");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("elr: lambda must be in (0,1)");

  ElrField f;
  f.frames = early.frames;
  f.bins = early.bins;
  f.te = te;
  f.elr_db.assign(early.frames * early.bins, 0.0);
  f.valid.assign(early.frames * early.bins, 0);
  f.early_pow.assign(early.frames * early.bins, 0.0);
  f.late_pow.assign(early.frames * early.bins, 0.0);

  double total = 0.0;
  for (const auto& v : early.data) total += std::norm(v);
  for (const auto& v : late.data) total += std::norm(v);
  const double floor = kElrFloorRatio * total;

  std::vector<double> pe(early.bins, 0.0), pl(early.bins, 0.0);
  for (size_t l = 0; l < early.frames; ++l) {
    for (size_t b = 0; b < early.bins; ++b) {
      pe[b] = lambda * pe[b] + (1.0 - lambda) * std::norm(early.at(l, b));
      pl[b] = lambda * pl[b] + (1.0 - lambda) * std::norm(late.at(l, b));
      const size_t i = l * early.bins + b;
      f.early_pow[i] = pe[b];
      f.late_pow[i] = pl[b];
      if (pl[b] >= floor && pe[b] > 0.0) {
        f.elr_db[i] = 10.0 * std::log10(pe[b] / pl[b]);
        f.valid[i] = 1;
      }
    }
  }
  return f;
}

std::vector<double> elr_per_frequency_db(const ElrField& field) {
  std::vector<double> out(field.bins,
                          -std::numeric_limits<double>::infinity());
  for (size_t b = 0; b < field.bins; ++b) {
    double pe = 0.0, pl = 0.0;
    for (size_t l = 0; l < field.frames; ++l) {
      pe += field.early_pow[l * field.bins + b];
      pl += field.late_pow[l * field.bins + b];
    }
    if (pl > 0.0 && pe > 0.0) out[b] = 10.0 * std::log10(pe / pl);
  }
  return out;
}

double elr_scalar_db(const ElrField& field) {
  double pe = 0.0, pl = 0.0;
  for (double v : field.early_pow) pe += v;
  for (double v : field.late_pow) pl += v;
  if (pl <= 0.0) return std::numeric_limits<double>::infinity();
  if (pe <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(pe / pl);
}

CdrField cdr_field_from_elr(const ElrField& field) {
  CdrField c;
  c.frames = field.frames;
  c.bins = field.bins;
  c.valid = field.valid;
  c.cdr.resize(field.elr_db.size());
  for (size_t i = 0; i < c.cdr.size(); ++i)
    c.cdr[i] = field.valid[i] ? std::pow(10.0, field.elr_db[i] / 10.0) : 0.0;
  return c;
}

double diffuseness_mse(const CdrField& truth, const CdrField& estimate) {
  if (truth.frames != estimate.frames || truth.bins != estimate.bins)
    throw std::invalid_argument("diffuseness_mse: field shape mismatch");
  double acc = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < truth.cdr.size(); ++i) {
    if (!truth.valid[i] || !estimate.valid[i]) continue;
    const double d = diffuseness(truth.cdr[i]) - diffuseness(estimate.cdr[i]);
    acc += d * d;
    ++n;
  }
  return n ? acc / n : 0.0;
}

namespace {

// Triangular mel filterbank, band magnitudes from a one-sided power spectrum.
std::vector<std::vector<std::pair<int, double>>> mel_filters(
    int num_bands, double f_lo, double f_hi, int nfft, double sample_rate) {
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto imel = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double m_lo = mel(f_lo), m_hi = mel(f_hi);
  std::vector<double> edges(num_bands + 2);
  for (int i = 0; i < num_bands + 2; ++i)
    edges[i] = imel(m_lo + (m_hi - m_lo) * i / (num_bands + 1));

  const int bins = nfft / 2 + 1;
  const double bin_hz = sample_rate / nfft;
  std::vector<std::vector<std::pair<int, double>>> filters(num_bands);
  for (int j = 0; j < num_bands; ++j) {
    const double fl = edges[j], fc = edges[j + 1], fr = edges[j + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f >= fl && f <= fc && fc > fl) w = (f - fl) / (fc - fl);
      else if (f > fc && f <= fr && fr > fc) w = (fr - f) / (fr - fc);
      if (w > 0.0) filters[j].push_back({k, w});
    }
  }
  return filters;
}

}  // namespace

double fwsegsnr(std::span<const double> reference, std::span<const double> test,
                double sample_rate, const FwSegSnrOptions& opt) {
  if (reference.size() != test.size())
    throw std::invalid_argument("fwsegsnr: length mismatch");
  const int seg = static_cast<int>(std::round(opt.segment_s * sample_rate));
  const int hop = static_cast<int>(std::round(opt.hop_s * sample_rate));
  if (reference.size() < static_cast<size_t>(seg))
    throw std::invalid_argument("fwsegsnr: signal shorter than one segment");

  int nfft = 1;
  while (nfft < seg) nfft <<= 1;
  RealFft fft(nfft);
  const auto filters =
      mel_filters(opt.num_bands, opt.f_lo, opt.f_hi, nfft, sample_rate);

  std::vector<double> window(seg);
  for (int i = 0; i < seg; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (seg - 1));

  // Silence floor relative to the overall reference level.
  double total = 0.0;
  for (double v : reference) total += v * v;
  const double mean_pow = total / reference.size();
  const double silence_floor = 1e-8 * mean_pow * seg;

  std::vector<double> buf(nfft, 0.0);
  std::vector<std::complex<double>> R(fft.bins()), T(fft.bins());
  double snr_sum = 0.0;
  size_t count = 0;
  for (size_t start = 0; start + seg <= reference.size(); start += hop) {
    double seg_pow = 0.0;
    for (int i = 0; i < seg; ++i) {
      const double v = reference[start + i];
      seg_pow += v * v;
    }
    if (seg_pow <= silence_floor) continue;  // silent reference: skip

    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < seg; ++i) buf[i] = window[i] * reference[start + i];
    fft.forward(buf, R);
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < seg; ++i) buf[i] = window[i] * test[start + i];
    fft.forward(buf, T);

    double num = 0.0, den = 0.0;
    for (const auto& filt : filters) {
      double pr = 0.0, pt = 0.0;
      for (auto [k, w] : filt) {
        pr += w * std::norm(R[k]);
        pt += w * std::norm(T[k]);
      }
      const double mr = std::sqrt(pr), mt = std::sqrt(pt);
      if (mr <= 0.0) continue;
      const double err = (mr - mt) * (mr - mt);
      const double snr = (err <= 0.0)
                             ? opt.clip_hi_db
                             : 10.0 * std::log10(mr * mr / err);
      num += std::pow(mr, opt.weight_exponent) * snr;
      den += std::pow(mr, opt.weight_exponent);
    }
    if (den <= 0.0) continue;
    snr_sum += std::clamp(num / den, opt.clip_lo_db, opt.clip_hi_db);
    ++count;
  }
  if (count == 0) throw std::runtime_error("fwsegsnr: no usable segments");
  return snr_sum / count;
}

double t60_from_edc(const ImpulseResponse& rir) {
  const auto& h = rir.samples;
  if (h.size() < 16) throw std::invalid_argument("t60_from_edc: RIR too short");

  // Schroeder backward integration.
  std::vector<double> edc(h.size());
  double acc = 0.0;
  for (size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    edc[i] = acc;
  }
  if (edc[0] <= 0.0) throw std::invalid_argument("t60_from_edc: silent RIR");

  // dB curve, fit between the -5 dB and -25 dB crossings. The last 5% of the
  // curve is ignored (backward integration is unreliable there).
  const size_t usable = h.size() - h.size() / 20;
  size_t t5 = 0, t25 = 0;
  bool have5 = false, have25 = false;
  for (size_t i = 0; i < usable; ++i) {
    const double db = 10.0 * std::log10(edc[i] / edc[0]);
    if (!have5 && db <= -5.0) {
      t5 = i;
      have5 = true;
    }
    if (!have25 && db <= -25.0) {
      t25 = i;
      have25 = true;
      break;
    }
  }
  if (!have5 || !have25 || t25 <= t5 + 8)
    throw std::runtime_error("t60_from_edc: insufficient decay range");

  // Least-squares line through the dB curve on [t5, t25].
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const size_t n = t25 - t5 + 1;
  for (size_t i = t5; i <= t25; ++i) {
    const double x = static_cast<double>(i);
    const double y = 10.0 * std::log10(edc[i] / edc[0]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);  // dB per sample
  if (!(slope < 0.0)) throw std::runtime_error("t60_from_edc: non-decaying EDC");
  return -60.0 / slope / rir.sample_rate;
}

}  // namespace cdr
