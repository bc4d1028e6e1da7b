#include "cdr/filterbank.hpp"

#include <cmath>
#include <stdexcept>

#include "cdr/fft.hpp"

namespace cdr {

namespace {

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double f = x / (2.0 * k);
    term *= f * f;
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

void check_config(const FilterbankConfig& c) {
  if (c.window_len <= 0 || c.fft_size <= 0 || c.hop <= 0)
    throw std::invalid_argument("filterbank: lengths must be positive");
  if (c.window_len % c.fft_size != 0)
    throw std::invalid_argument("filterbank: window_len must be a multiple of fft_size");
  if (c.fft_size % c.hop != 0)
    throw std::invalid_argument("filterbank: hop must divide fft_size");
  if (c.sample_rate <= 0.0)
    throw std::invalid_argument("filterbank: sample_rate must be positive");
}

void check_prototype(const FilterbankConfig& c) {
  if (static_cast<int>(c.prototype.size()) != c.window_len)
    throw std::invalid_argument("filterbank: prototype length != window_len");
  for (double v : c.prototype)
    if (!std::isfinite(v)) throw std::invalid_argument("filterbank: prototype not finite");
}

// Zero the per-leg autocorrelation at lag `gap` taps (gap = fft_size/hop per
// fold) so the time-fold alias cancels in analysis+synthesis. For the
// two-fold case one symmetric sweep is exact; deeper folds converge in a few.
void orthogonalize_legs(std::vector<double>& h, int hop, int gap, int taps_per_leg) {
  const int folds = taps_per_leg / gap;  // window_len / fft_size
  const int max_sweeps = (folds <= 2) ? 1 : 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double worst = 0.0;
    for (int lag = gap; lag < taps_per_leg; lag += gap) {
      for (int r = 0; r < hop; ++r) {
        double uu = 0, vv = 0, uv = 0;
        const int n_pairs = taps_per_leg - lag;
        for (int q = 0; q < n_pairs; ++q) {
          const double a = h[r + q * hop];
          const double b = h[r + (q + lag) * hop];
          uu += a * a;
          vv += b * b;
          uv += a * b;
        }
        if (uv == 0.0) continue;
        const double s = uu + vv;
        const double disc = std::max(0.0, s * s - 4.0 * uv * uv);
        const double alpha = (s - std::sqrt(disc)) / (2.0 * uv);
        for (int q = 0; q < n_pairs; ++q) {
          const double a = h[r + q * hop];
          const double b = h[r + (q + lag) * hop];
          h[r + q * hop] = a - alpha * b;
          h[r + (q + lag) * hop] = b - alpha * a;
        }
        worst = std::max(worst, std::abs(uv) / s);
      }
    }
    if (worst < 1e-16) break;
  }
}

}  // namespace

std::vector<double> FilterbankConfig::freq_grid() const {
  std::vector<double> f(bins());
  for (int b = 0; b < bins(); ++b) f[b] = bin_freq(b);
  return f;
}

std::vector<double> design_prototype(const FilterbankConfig& config) {
  check_config(config);
  const int K = config.window_len;
  const int N = config.fft_size;

  if (K == N) return std::vector<double>(K, 1.0);  // single-block windowed DFT

  // Kaiser-windowed sinc, cutoff at half the bin spacing.
  const double beta = 10.0;
  const double center = (K - 1) / 2.0;
  const double i0b = bessel_i0(beta);
  std::vector<double> h(K);
  for (int n = 0; n < K; ++n) {
    const double t = n - center;
    const double wc = M_PI / N;
    const double lp = (std::abs(t) < 1e-12) ? wc / M_PI : std::sin(wc * t) / (M_PI * t);
    const double r = 2.0 * t / (K - 1);
    h[n] = lp * bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
  }
  orthogonalize_legs(h, config.hop, N / config.hop, K / config.hop);
  return h;
}

size_t analysis_frames(size_t signal_len, const FilterbankConfig& config) {
  check_config(config);
  const size_t K = config.window_len;
  const size_t R = config.hop;
  if (signal_len < K) throw std::invalid_argument("filterbank: signal shorter than window");
  return (signal_len + K - R - 1) / R + 1;
}

Spectrogram analyze(std::span<const double> signal, const FilterbankConfig& config) {
  check_config(config);
  if (signal.empty()) throw std::invalid_argument("analyze: empty signal");
  FilterbankConfig cfg = config;
  if (cfg.prototype.empty()) cfg.prototype = design_prototype(cfg);
  check_prototype(cfg);
  for (double v : signal)
    if (!std::isfinite(v)) throw std::invalid_argument("analyze: non-finite sample");

  const int K = cfg.window_len;
  const int N = cfg.fft_size;
  const int R = cfg.hop;
  const size_t L = analysis_frames(signal.size(), cfg);
  const size_t front_pad = K - R;
  const size_t padded_len = (L - 1) * R + K;

  std::vector<double> padded(padded_len, 0.0);
  std::copy(signal.begin(), signal.end(), padded.begin() + front_pad);

  Spectrogram spec;
  spec.frames = L;
  spec.bins = cfg.bins();
  spec.config = cfg;
  spec.source_len = signal.size();
  spec.data.resize(L * spec.bins);

  RealFft fft(N);
  std::vector<double> folded(N);
  const double* h = cfg.prototype.data();
  for (size_t l = 0; l < L; ++l) {
    const double* x = padded.data() + l * R;
    for (int m = 0; m < N; ++m) {
      double acc = 0.0;
      for (int p = m; p < K; p += N) acc += h[p] * x[p];
      folded[m] = acc;
    }
    fft.forward(folded, spec.frame(l));
  }
  return spec;
}

std::vector<double> synthesize(const Spectrogram& spec, const FilterbankConfig& config) {
  check_config(config);
  FilterbankConfig cfg = config;
  if (cfg.prototype.empty()) cfg.prototype = design_prototype(cfg);
  check_prototype(cfg);
  if (spec.bins != static_cast<size_t>(cfg.bins()) ||
      spec.config.fft_size != cfg.fft_size || spec.config.window_len != cfg.window_len ||
      spec.config.hop != cfg.hop)
    throw std::invalid_argument("synthesize: spectrogram/config mismatch");
  if (spec.frames == 0) return {};

  const int K = cfg.window_len;
  const int N = cfg.fft_size;
  const int R = cfg.hop;
  const size_t L = spec.frames;
  const size_t front_pad = K - R;
  const size_t padded_len = (L - 1) * R + K;

  std::vector<double> out(padded_len, 0.0);
  RealFft fft(N);
  std::vector<double> block(N);
  const double* h = cfg.prototype.data();
  for (size_t l = 0; l < L; ++l) {
    fft.inverse(spec.frame(l), block);
    double* z = out.data() + l * R;
    for (int n = 0; n < K; ++n) z[n] += h[n] * block[n % N];
  }

  // Overlap-add normalizer on the hop lattice, periodic with period hop.
  std::vector<double> w(R, 0.0);
  for (int r = 0; r < R; ++r)
    for (int q = r; q < K; q += R) w[r] += h[q] * h[q];
  for (int r = 0; r < R; ++r)
    if (w[r] <= 0.0) throw std::runtime_error("synthesize: degenerate prototype");

  std::vector<double> result(spec.source_len, 0.0);
  const size_t n_copy = std::min(spec.source_len, padded_len - front_pad);
  for (size_t i = 0; i < n_copy; ++i) {
    const size_t t = front_pad + i;
    result[i] = out[t] / w[t % R];
  }
  return result;
}

}  // namespace cdr
