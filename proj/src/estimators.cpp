#include "cdr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cdr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Ratio num/den for denominators that are <= 0 by construction (den is
// Re{gamma_s^* gamma_x} - 1 or |gamma_x|^2 - 1). den == 0 means the coherence
// sits at the fully coherent point: the one-sided limit is +inf.
double clipped_ratio(double num, double den) {
  if (den == 0.0) return kInf;
  const double v = num / den;
  return v > 0.0 ? v : 0.0;
}
}  // namespace

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::kJeub: return "jeub";
    case Estimator::kThiergart1: return "thiergart1";
    case Estimator::kThiergart2: return "thiergart2";
    case Estimator::kProp1: return "prop1";
    case Estimator::kProp2: return "prop2";
    case Estimator::kProp2u: return "prop2u";
    case Estimator::kProp3: return "prop3";
    case Estimator::kProp4: return "prop4";
  }
  return "?";
}

std::optional<Estimator> estimator_from_string(const std::string& name) {
  for (Estimator e : all_estimators())
    if (to_string(e) == name) return e;
  return std::nullopt;
}

std::vector<Estimator> all_estimators() {
  return {Estimator::kJeub,  Estimator::kThiergart1, Estimator::kThiergart2,
          Estimator::kProp1, Estimator::kProp2,      Estimator::kProp2u,
          Estimator::kProp3, Estimator::kProp4};
}

bool estimator_needs_tdoa(Estimator e) {
  return e != Estimator::kThiergart2 && e != Estimator::kProp3;
}

bool estimator_needs_noise_model(Estimator e) { return e != Estimator::kProp4; }

std::complex<double> cdr_ideal(std::complex<double> gamma_x,
                               std::complex<double> gamma_s, double gamma_n) {
  const std::complex<double> den = gamma_x - gamma_s;
  if (den == std::complex<double>(0.0, 0.0)) return {kInf, 0.0};
  return (std::complex<double>(gamma_n, 0.0) - gamma_x) / den;
}

double cdr_jeub(std::complex<double> gamma_x, std::complex<double> gamma_s,
                double gamma_n) {
  const double aligned = (std::conj(gamma_s) * gamma_x).real();
  return clipped_ratio(gamma_n - aligned, aligned - 1.0);
}

double cdr_thiergart1(std::complex<double> gamma_x, std::complex<double> gamma_s,
                      double gamma_n) {
  const std::complex<double> den = gamma_x - gamma_s;
  if (den == std::complex<double>(0.0, 0.0)) return kInf;
  const double v = ((std::complex<double>(gamma_n, 0.0) - gamma_x) / den).real();
  return v > 0.0 ? v : 0.0;
}

double cdr_thiergart2(std::complex<double> gamma_x, double gamma_n) {
  const double mag = std::abs(gamma_x);
  if (mag >= 1.0) return kInf;
  const double phase = std::arg(gamma_x);
  const std::complex<double> unit{std::cos(phase), std::sin(phase)};
  const double v =
      ((std::complex<double>(gamma_n, 0.0) - gamma_x) / (gamma_x - unit)).real();
  return v > 0.0 ? v : 0.0;
}

double cdr_prop1(std::complex<double> gamma_x, std::complex<double> gamma_s,
                 double gamma_n) {
  const std::complex<double> num =
      std::conj(gamma_s) * (std::complex<double>(gamma_n, 0.0) - gamma_x);
  const double den = (std::conj(gamma_s) * gamma_x).real() - 1.0;
  return clipped_ratio(num.real(), den);
}

double cdr_prop2_uncompensated(std::complex<double> gamma_x,
                               std::complex<double> gamma_s, double gamma_n) {
  const std::complex<double> num =
      std::conj(gamma_s) * (std::complex<double>(gamma_n, 0.0) - gamma_x);
  const double den = std::abs((std::conj(gamma_s) * gamma_x).real() - 1.0);
  if (den == 0.0) return kInf;
  return std::abs(num) / den;
}

double prop2_bias_factor(std::complex<double> gamma_s, double gamma_n) {
  const double num = 1.0 - gamma_n * std::cos(std::arg(gamma_s));
  const double den = std::abs(std::complex<double>(gamma_n, 0.0) - gamma_s);
  if (den == 0.0) return kInf;
  return num / den;
}

double cdr_prop2(std::complex<double> gamma_x, std::complex<double> gamma_s,
                 double gamma_n) {
  return prop2_bias_factor(gamma_s, gamma_n) *
         cdr_prop2_uncompensated(gamma_x, gamma_s, gamma_n);
}

double cdr_prop3(std::complex<double> gamma_x, double gamma_n) {
  const double re = gamma_x.real();
  const double mag2 = std::norm(gamma_x);
  if (mag2 >= 1.0) return kInf;
  const double radicand = gamma_n * gamma_n * re * re - gamma_n * gamma_n * mag2 +
                          gamma_n * gamma_n - 2.0 * gamma_n * re + mag2;
  const double root = std::sqrt(std::max(0.0, radicand));
  const double v = (gamma_n * re - mag2 - root) / (mag2 - 1.0);
  return v > 0.0 ? v : 0.0;
}

double cdr_prop4(std::complex<double> gamma_x, std::complex<double> gamma_s) {
  const double im_s = gamma_s.imag();
  if (std::abs(im_s) < kProp4ImagFloor) return 0.0;  // not usable near dt = 0
  const double im_x = gamma_x.imag();
  const double ratio = im_x / im_s;
  if (ratio >= 1.0) return kInf;
  if (ratio <= 0.0) return 0.0;
  return im_x / (im_s - im_x);
}

double estimate_cdr(Estimator e, std::complex<double> gamma_x,
                    std::complex<double> gamma_s, double gamma_n) {
  switch (e) {
    case Estimator::kJeub: return cdr_jeub(gamma_x, gamma_s, gamma_n);
    case Estimator::kThiergart1: return cdr_thiergart1(gamma_x, gamma_s, gamma_n);
    case Estimator::kThiergart2: return cdr_thiergart2(gamma_x, gamma_n);
    case Estimator::kProp1: return cdr_prop1(gamma_x, gamma_s, gamma_n);
    case Estimator::kProp2: return cdr_prop2(gamma_x, gamma_s, gamma_n);
    case Estimator::kProp2u: return cdr_prop2_uncompensated(gamma_x, gamma_s, gamma_n);
    case Estimator::kProp3: return cdr_prop3(gamma_x, gamma_n);
    case Estimator::kProp4: return cdr_prop4(gamma_x, gamma_s);
  }
  throw std::invalid_argument("estimate_cdr: unknown estimator");
}

double diffuseness(double cdr) {
  if (std::isinf(cdr)) return 0.0;
  if (!(cdr >= 0.0)) throw std::invalid_argument("diffuseness: cdr must be >= 0");
  return 1.0 / (cdr + 1.0);
}

double cdr_to_db(double cdr, double cap_db) {
  if (cdr <= 0.0) return -cap_db;
  const double db = 10.0 * std::log10(cdr);
  return std::clamp(db, -cap_db, cap_db);
}

void CdrField::append(const CdrFrame& f) {
  if (bins == 0) bins = f.cdr.size();
  if (f.cdr.size() != bins) throw std::invalid_argument("CdrField: bin mismatch");
  cdr.insert(cdr.end(), f.cdr.begin(), f.cdr.end());
  valid.insert(valid.end(), f.valid.begin(), f.valid.end());
  ++frames;
}

CdrFrame estimate_cdr_bins(Estimator e, const CoherenceField& gamma,
                           const CoherenceModels& models) {
  const size_t n = gamma.bins();
  if (models.gamma_s.size() != n || models.gamma_n.size() != n)
    throw std::invalid_argument("estimate_cdr_bins: model/coherence bin mismatch");
  CdrFrame out;
  out.cdr.assign(n, 0.0);
  out.valid.assign(n, 0);
  for (size_t b = 0; b < n; ++b) {
    if (!gamma.valid[b]) continue;
    bool usable = true;
    if (e == Estimator::kProp4) {
      // Direct model is real at DC and Nyquist for a real filterbank.
      const bool edge_bin = (b == 0 || b + 1 == n);
      usable = !edge_bin && std::abs(models.gamma_s[b].imag()) >= kProp4ImagFloor;
    }
    out.cdr[b] = usable ? estimate_cdr(e, gamma.gamma[b], models.gamma_s[b],
                                       models.gamma_n[b])
                        : 0.0;
    out.valid[b] = usable ? 1 : 0;
  }
  return out;
}

}  // namespace cdr
