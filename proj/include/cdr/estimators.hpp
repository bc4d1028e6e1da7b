#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdr/coherence.hpp"

namespace cdr {

/// CDR estimators operating on the short-time coherence and the coherence
/// models of the direct and diffuse components. All return an extended
/// nonnegative real: every point of the closed unit disk maps into [0, +inf],
/// with singular denominators mapped to +inf.
enum class Estimator {
  kJeub,        ///< time-aligned cross-spectrum estimator; biased for dt != 0
  kThiergart1,  ///< real part of the exact solution; unbiased, phase-sensitive
  kThiergart2,  ///< DOA-independent via the instantaneous phase; underestimates
  kProp1,       ///< phase-corrected variant of Jeub; unbiased
  kProp2,       ///< magnitude variant with bias compensation; unbiased
  kProp2u,      ///< magnitude variant without the compensation factor
  kProp3,       ///< DOA-independent geometric solution; unbiased
  kProp4,       ///< noise-model-free, imaginary parts only; unbiased for dt != 0
};

/// Identifier strings used by the CLI and config files:
/// jeub, thiergart1, thiergart2, prop1, prop2, prop2u, prop3, prop4.
std::string to_string(Estimator e);
std::optional<Estimator> estimator_from_string(const std::string& name);
std::vector<Estimator> all_estimators();

/// True if the estimator needs the direct-path model (a TDOA/DOA).
bool estimator_needs_tdoa(Estimator e);
/// True if the estimator needs the noise coherence model.
bool estimator_needs_noise_model(Estimator e);

/// prop4 degenerates when the direct model is (close to) real-valued.
inline constexpr double kProp4ImagFloor = 1e-6;

/// Exact complex solution (gamma_n - gamma_x)/(gamma_x - gamma_s); diagnostic
/// reference only, generally complex-valued off the model line.
std::complex<double> cdr_ideal(std::complex<double> gamma_x,
                               std::complex<double> gamma_s, double gamma_n);

double cdr_jeub(std::complex<double> gamma_x, std::complex<double> gamma_s,
                double gamma_n);
double cdr_thiergart1(std::complex<double> gamma_x, std::complex<double> gamma_s,
                      double gamma_n);
double cdr_thiergart2(std::complex<double> gamma_x, double gamma_n);
double cdr_prop1(std::complex<double> gamma_x, std::complex<double> gamma_s,
                 double gamma_n);
double cdr_prop2_uncompensated(std::complex<double> gamma_x,
                               std::complex<double> gamma_s, double gamma_n);
double cdr_prop2(std::complex<double> gamma_x, std::complex<double> gamma_s,
                 double gamma_n);
/// Bias compensation factor of the magnitude variant,
/// (1 - gamma_n cos(arg gamma_s)) / |gamma_n - gamma_s|.
double prop2_bias_factor(std::complex<double> gamma_s, double gamma_n);
double cdr_prop3(std::complex<double> gamma_x, double gamma_n);
/// Returns 0 when |Im gamma_s| < kProp4ImagFloor (bin not usable).
double cdr_prop4(std::complex<double> gamma_x, std::complex<double> gamma_s);

/// Dispatch on the estimator id; gamma_s/gamma_n are taken from the models
/// at the same bin (unused ones ignored).
double estimate_cdr(Estimator e, std::complex<double> gamma_x,
                    std::complex<double> gamma_s, double gamma_n);

/// Diffuseness D = 1/(cdr+1); maps [0,inf] onto (0,1] with inf -> 0.
double diffuseness(double cdr);

/// CDR value in dB with +inf capped (default +100 dB) for bounded exports.
double cdr_to_db(double cdr, double cap_db = 100.0);

/// CDR estimates for the bins of one frame.
struct CdrFrame {
  std::vector<double> cdr;          ///< values in [0,inf]
  std::vector<std::uint8_t> valid;  ///< 0 where coherence or estimator is unusable
};

/// Per-(frame,bin) CDR estimates with validity flags.
struct CdrField {
  size_t frames = 0;
  size_t bins = 0;
  std::vector<double> cdr;          ///< row-major frames x bins
  std::vector<std::uint8_t> valid;
  Estimator method = Estimator::kProp2;

  double at(size_t l, size_t b) const { return cdr[l * bins + b]; }
  bool valid_at(size_t l, size_t b) const { return valid[l * bins + b] != 0; }
  void append(const CdrFrame& f);
};

/// Evaluate one estimator over the coherence of one frame. DC and Nyquist
/// bins are marked invalid for prop4 (the direct model is real there).
CdrFrame estimate_cdr_bins(Estimator e, const CoherenceField& gamma,
                           const CoherenceModels& models);

}  // namespace cdr
