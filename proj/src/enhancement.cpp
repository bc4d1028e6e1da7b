#include "cdr/enhancement.hpp"

#include <cmath>
#include <stdexcept>

namespace cdr {

void PostfilterConfig::validate() const {
  if (!(mu >= 0.0)) throw std::invalid_argument("postfilter: mu must be >= 0");
  if (!(g_min > 0.0 && g_min <= 1.0))
    throw std::invalid_argument("postfilter: g_min must be in (0,1]");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("postfilter: lambda must be in (0,1)");
  if (!(mic_distance > 0.0) || !(sound_speed > 0.0))
    throw std::invalid_argument("postfilter: d and c must be positive");
  if (estimator_needs_tdoa(estimator) && !tdoa.has_value())
    throw std::invalid_argument("postfilter: estimator " + to_string(estimator) +
                                " requires a TDOA (or DOA)");
  if (estimator == Estimator::kProp3 && tdoa.has_value())
    throw std::invalid_argument("postfilter: prop3 is DOA-independent; remove the TDOA");
  if (tdoa.has_value() && !std::isfinite(*tdoa))
    throw std::invalid_argument("postfilter: tdoa must be finite");
}

std::vector<std::complex<double>> preprocess_frame(
    std::span<const std::complex<double>> x1_frame,
    std::span<const std::complex<double>> x2_frame) {
  if (x1_frame.size() != x2_frame.size())
    throw std::invalid_argument("preprocess: bin count mismatch");
  std::vector<std::complex<double>> y(x1_frame.size());
  for (size_t b = 0; b < y.size(); ++b) {
    const double mag =
        0.5 * std::sqrt(std::norm(x1_frame[b]) + std::norm(x2_frame[b]));
    const double phase = std::arg(x1_frame[b]);  // arg(0) == 0
    y[b] = std::polar(mag, phase);
  }
  return y;
}

double postfilter_gain(double cdr, const PostfilterConfig& cfg) {
  if (!(cdr >= 0.0)) throw std::invalid_argument("gain: cdr must be >= 0");
  const double sub = std::isinf(cdr) ? 0.0 : std::sqrt(cfg.mu / (cdr + 1.0));
  return std::max(cfg.g_min, 1.0 - sub);
}

Spectrogram preprocess(const Spectrogram& x1, const Spectrogram& x2) {
  if (x1.frames != x2.frames || x1.bins != x2.bins)
    throw std::invalid_argument("preprocess: spectrogram shape mismatch");
  Spectrogram y = x1;
  for (size_t l = 0; l < x1.frames; ++l) {
    auto row = preprocess_frame(x1.frame(l), x2.frame(l));
    std::copy(row.begin(), row.end(), y.frame(l).begin());
  }
  return y;
}

Spectrogram apply_gains(const Spectrogram& spec, const Telemetry& telemetry) {
  if (spec.frames != telemetry.frames || spec.bins != telemetry.bins)
    throw std::invalid_argument("apply_gains: shape mismatch");
  Spectrogram out = spec;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= telemetry.gain[i];
  return out;
}

DereverbResult dereverberate(std::span<const double> x1, std::span<const double> x2,
                             const PostfilterConfig& cfg,
                             const FilterbankConfig& fb_cfg, bool want_telemetry) {
  cfg.validate();
  if (x1.size() != x2.size())
    throw std::invalid_argument("dereverberate: channel length mismatch");

  FilterbankConfig fb = fb_cfg;
  if (fb.prototype.empty()) fb.prototype = design_prototype(fb);

  const Spectrogram s1 = analyze(x1, fb);
  const Spectrogram s2 = analyze(x2, fb);

  const std::vector<double> freqs = fb.freq_grid();
  const CoherenceModels models = CoherenceModels::make(
      freqs, cfg.mic_distance, cfg.sound_speed, cfg.tdoa.value_or(0.0),
      cfg.noise_model);

  Spectrogram z = s1;  // shape/config template for the output
  CrossSpectra psd = CrossSpectra::zeros(s1.bins, cfg.lambda);

  Telemetry tm;
  tm.bins = s1.bins;
  tm.freq_hz = freqs;

  double gain_sum = 0.0;
  for (size_t l = 0; l < s1.frames; ++l) {
    psd = update_psd(psd, s1.frame(l), s2.frame(l));
    const CoherenceField gamma = estimate_coherence(psd);
    const CdrFrame est = estimate_cdr_bins(cfg.estimator, gamma, models);
    const auto y = preprocess_frame(s1.frame(l), s2.frame(l));
    auto out_row = z.frame(l);
    std::vector<double> gains(s1.bins);
    for (size_t b = 0; b < s1.bins; ++b) {
      gains[b] = postfilter_gain(est.cdr[b], cfg);
      out_row[b] = gains[b] * y[b];
      gain_sum += gains[b];
    }
    if (want_telemetry) {
      tm.frames++;
      tm.cdr.insert(tm.cdr.end(), est.cdr.begin(), est.cdr.end());
      tm.valid.insert(tm.valid.end(), est.valid.begin(), est.valid.end());
      tm.gain.insert(tm.gain.end(), gains.begin(), gains.end());
    }
  }

  DereverbResult res;
  res.output = synthesize(z, fb);
  res.telemetry = std::move(tm);
  res.frames = s1.frames;
  res.mean_gain = s1.frames ? gain_sum / double(s1.frames * s1.bins) : 0.0;
  res.delay_samples = 0;  // analysis padding is compensated in synthesize()
  return res;
}

}  // namespace cdr
