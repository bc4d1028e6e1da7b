#include <cmath>
#include <numeric>

#include <doctest.h>

#include "cdr/coherence.hpp"
#include "cdr/fft.hpp"
#include "cdr/filterbank.hpp"
#include "cdr/metrics.hpp"
#include "cdr/rng.hpp"
#include "cdr/simulator.hpp"

using namespace cdr;

namespace {

RoomSpec small_room() {
  RoomSpec room;
  room.dims = {4.0, 3.0, 2.5};
  room.beta = {0.9, 0.9, 0.9, 0.9, 0.9, 0.9};
  room.source_pos = {3.1, 2.2, 1.3};
  room.mic_positions = {{1.5, 1.2, 1.2}, {1.58, 1.2, 1.2}};
  return room;
}

double energy(std::span<const double> x) {
  double e = 0;
  for (double v : x) e += v * v;
  return e;
}

}  // namespace

TEST_CASE("room validation") {
  RoomSpec room = small_room();
  SUBCASE("valid room passes") { CHECK_NOTHROW(room.validate()); }
  SUBCASE("source outside") {
    room.source_pos.x = 5.0;
    CHECK_THROWS_AS(room.validate(), std::invalid_argument);
  }
  SUBCASE("mic outside") {
    room.mic_positions[0].z = -0.1;
    CHECK_THROWS_AS(room.validate(), std::invalid_argument);
  }
  SUBCASE("beta out of range") {
    room.beta[2] = 1.0;
    CHECK_THROWS_AS(room.validate(), std::invalid_argument);
  }
}

TEST_CASE("free field gives a single impulse at the propagation delay") {
  RoomSpec room = small_room();
  room.beta = {0, 0, 0, 0, 0, 0};
  // place source/mic at an exact-integer sample distance: 48 samples
  const double dist = 343.0 * 48.0 / 16000.0;  // 1.029 m
  room.source_pos = {1.5 + dist, 1.2, 1.2};
  const ImpulseResponse rir = simulate_rir(room, 0);

  const size_t peak = direct_path_peak(rir);
  CHECK(peak == 48);
  CHECK(rir.samples[peak] == doctest::Approx(1.0 / (4.0 * M_PI * dist)).epsilon(1e-9));
  // everything else is negligible
  double residual = 0.0;
  for (size_t i = 0; i < rir.samples.size(); ++i)
    if (i != peak) residual = std::max(residual, std::abs(rir.samples[i]));
  CHECK(residual < 1e-12);
}

TEST_CASE("equidistant microphones see the same direct delay") {
  RoomSpec room = small_room();
  room.beta = {0, 0, 0, 0, 0, 0};
  room.source_pos = {2.0, 2.0, 1.2};
  room.mic_positions = {{1.5, 1.0, 1.2}, {2.5, 1.0, 1.2}};  // symmetric about source
  const ImpulseResponse r1 = simulate_rir(room, 0);
  const ImpulseResponse r2 = simulate_rir(room, 1);
  CHECK(direct_path_peak(r1) == direct_path_peak(r2));
}

TEST_CASE("reverberant RIR has an exponential (linear-in-dB) decay") {
  RoomSpec room = small_room();
  const ImpulseResponse rir = simulate_rir(room, 0);

  // Schroeder EDC in dB should be close to a straight line
  const auto& h = rir.samples;
  std::vector<double> edc(h.size());
  double acc = 0;
  for (size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    edc[i] = acc;
  }
  const size_t peak = direct_path_peak(rir);
  std::vector<double> xs, ys;
  for (size_t i = peak; i < h.size() - h.size() / 10; i += 16) {
    const double db = 10.0 * std::log10(edc[i] / edc[0]);
    if (db < -45.0) break;
    xs.push_back(static_cast<double>(i));
    ys.push_back(db);
  }
  REQUIRE(xs.size() > 10);
  // linear regression R^2
  const double n = xs.size();
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  CHECK(r2 > 0.98);
}

TEST_CASE("rir simulation is deterministic") {
  RoomSpec room = small_room();
  const ImpulseResponse a = simulate_rir(room, 0);
  const ImpulseResponse b = simulate_rir(room, 0);
  REQUIRE(a.samples.size() == b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i] == b.samples[i]);
}

TEST_CASE("split_rir properties") {
  RoomSpec room = small_room();
  const ImpulseResponse rir = simulate_rir(room, 0);

  SUBCASE("exact reconstruction and disjoint support") {
    const auto [early, late] = split_rir(rir, 0.05);
    REQUIRE(early.samples.size() == rir.samples.size());
    for (size_t i = 0; i < rir.samples.size(); ++i) {
      CHECK(early.samples[i] + late.samples[i] == rir.samples[i]);
      CHECK(early.samples[i] * late.samples[i] == 0.0);
    }
    CHECK(energy(early.samples) + energy(late.samples) ==
          doctest::Approx(energy(rir.samples)).epsilon(1e-12));
  }
  SUBCASE("te beyond the RIR length leaves the late part empty") {
    const auto [early, late] = split_rir(rir, 10.0);
    CHECK(energy(late.samples) == 0.0);
  }
  SUBCASE("te = 0 keeps only the direct lobe early") {
    const auto [early, late] = split_rir(rir, 0.0);
    const size_t peak = direct_path_peak(rir);
    CHECK(energy(early.samples) > 0.0);
    // nothing earlier than the direct lobe is lost and nothing much after it kept
    for (size_t i = peak + kSincTaps; i < early.samples.size(); ++i)
      CHECK(early.samples[i] == 0.0);
  }
  SUBCASE("negative te throws") {
    CHECK_THROWS_AS(split_rir(rir, -0.1), std::invalid_argument);
  }
}

TEST_CASE("isotropic synthesis input validation") {
  const std::vector<Vec3> mics{{-0.04, 0, 0}, {0.04, 0, 0}};
  CHECK_THROWS_AS(
      synthesize_isotropic(IsotropicField::kSpherical, 8, mics, 1.0, 16000, 343, 0),
      std::invalid_argument);
  CHECK_THROWS_AS(
      synthesize_isotropic(IsotropicField::kSpherical, 64, mics, 0.0, 16000, 343, 0),
      std::invalid_argument);
}

TEST_CASE("isotropic synthesis is reproducible from the seed") {
  const std::vector<Vec3> mics{{-0.04, 0, 0}, {0.04, 0, 0}};
  const auto a =
      synthesize_isotropic(IsotropicField::kCylindrical, 32, mics, 0.5, 16000, 343, 7);
  const auto b =
      synthesize_isotropic(IsotropicField::kCylindrical, 32, mics, 0.5, 16000, 343, 7);
  for (size_t c = 0; c < a.size(); ++c)
    for (size_t i = 0; i < a[c].size(); ++i) CHECK(a[c][i] == b[c][i]);
}

TEST_CASE("a single plane wave is fully coherent") {
  // degenerate field: one direction dominates when num_sources is minimal and
  // we look at one of them; instead render one source directly
  const std::vector<Vec3> mics{{-0.04, 0, 0}, {0.04, 0, 0}};
  Rng rng(3);
  std::vector<double> src(32000);
  for (double& v : src) v = rng.gaussian();
  const double delay = 0.04 / 343.0 * 16000.0;
  const std::vector<double> x1 = delay_signal(src, -delay);
  const std::vector<double> x2 = delay_signal(src, +delay);

  FilterbankConfig fb;
  fb.prototype = design_prototype(fb);
  const CrossSpectra cs = average_cross_spectra(analyze(x1, fb), analyze(x2, fb));
  const CoherenceField g = estimate_coherence(cs);
  double min_mag = 1.0;
  for (size_t k = 2; k + 2 < g.bins(); ++k)
    if (g.valid[k]) min_mag = std::min(min_mag, std::abs(g.gamma[k]));
  CHECK(min_mag > 0.98);
}

TEST_CASE("spherical field matches the sinc coherence model") {
  const double d = 0.08;
  const std::vector<Vec3> mics{{-d / 2, 0, 0}, {d / 2, 0, 0}};
  const auto noise =
      synthesize_isotropic(IsotropicField::kSpherical, 360, mics, 10.0, 16000, 343, 1);
  FilterbankConfig fb;
  fb.prototype = design_prototype(fb);
  const CrossSpectra cs =
      average_cross_spectra(analyze(noise[0], fb), analyze(noise[1], fb));
  const CoherenceField g = estimate_coherence(cs);
  const auto model = model_diffuse(d, fb.freq_grid(), 343.0);
  double mse = 0.0;
  for (size_t k = 0; k < g.bins(); ++k)
    mse += (g.gamma[k].real() - model[k]) * (g.gamma[k].real() - model[k]);
  mse /= g.bins();
  CHECK(mse < 0.01);
}

TEST_CASE("cylindrical field matches the Bessel coherence model") {
  const double d = 0.08;
  const std::vector<Vec3> mics{{-d / 2, 0, 0}, {d / 2, 0, 0}};
  const auto noise = synthesize_isotropic(IsotropicField::kCylindrical, 360, mics,
                                          10.0, 16000, 343, 2);
  FilterbankConfig fb;
  fb.prototype = design_prototype(fb);
  const CrossSpectra cs =
      average_cross_spectra(analyze(noise[0], fb), analyze(noise[1], fb));
  const CoherenceField g = estimate_coherence(cs);
  const auto model = model_2d_isotropic(d, fb.freq_grid(), 343.0);
  double mse = 0.0;
  for (size_t k = 0; k < g.bins(); ++k)
    mse += (g.gamma[k].real() - model[k]) * (g.gamma[k].real() - model[k]);
  mse /= g.bins();
  CHECK(mse < 0.01);
}

TEST_CASE("mixture hits the broadband CDR target") {
  const auto clean = speech_like(10.0, 16000.0, 5);
  const MixtureResult mix = make_mixture(clean, 0.5, 0.0, 0.08, 343.0, 16000.0, 6);
  // realized broadband CDR: power-weighted over bands
  // recompute directly from band table: sum of numerators/denominators is not
  // exported, so check the mid bands stay near 0 dB on average
  double acc = 0.0;
  int n = 0;
  for (const auto& b : mix.realized_cdr) {
    if (!std::isfinite(b.cdr_db)) continue;
    if (b.f_lo < 200.0 || b.f_hi > 6000.0) continue;
    acc += std::pow(10.0, b.cdr_db / 10.0);
    ++n;
  }
  REQUIRE(n > 0);
  // broadband target 0 dB: band-averaged realized CDR within +-0.5 dB... the
  // per-band spread is larger, the mean must stay close
  CHECK(std::abs(10.0 * std::log10(acc / n)) < 1.5);

  SUBCASE("pure components at infinite targets") {
    const MixtureResult pure_n = make_mixture(
        clean, 0.5, -std::numeric_limits<double>::infinity(), 0.08, 343, 16000, 6);
    const MixtureResult pure_s = make_mixture(
        clean, 0.5, std::numeric_limits<double>::infinity(), 0.08, 343, 16000, 6);
    (void)pure_n;
    double diff = 0.0;
    const auto delayed =
        delay_signal(clean, -0.5 * 0.08 * std::sin(0.5) / 343.0 * 16000.0);
    for (size_t i = 0; i < clean.size(); i += 371)
      diff = std::max(diff, std::abs(pure_s.x1[i] - delayed[i]));
    CHECK(diff < 1e-12);
  }
}

TEST_CASE("broadband realized CDR is within half a dB") {
  const auto clean = speech_like(10.0, 16000.0, 15);
  const MixtureResult mix = make_mixture(clean, 0.3, 0.0, 0.08, 343.0, 16000.0, 16);
  // measure the realized ratio from the separated components
  double ps = 0.0, pn = 0.0;
  const MixtureResult clean_only = make_mixture(
      clean, 0.3, std::numeric_limits<double>::infinity(), 0.08, 343, 16000, 16);
  for (size_t i = 0; i < clean.size(); ++i) {
    const double s = clean_only.x1[i];
    const double v = mix.x1[i] - s;
    ps += s * s;
    pn += v * v;
  }
  CHECK(std::abs(10.0 * std::log10(ps / pn)) < 0.5);
}

TEST_CASE("per-band CDR shaping hits its targets") {
  const auto clean = speech_like(8.0, 16000.0, 25);
  const auto centers = third_octave_centers();
  std::vector<double> targets(centers.size(), 0.0);
  for (size_t i = 0; i < targets.size(); ++i) targets[i] = (i % 2) ? 6.0 : -6.0;
  const MixtureResult mix =
      make_mixture(clean, 0.4, 0.0, 0.08, 343.0, 16000.0, 26, targets);
  size_t checked = 0;
  for (size_t i = 0; i < centers.size(); ++i) {
    const auto& b = mix.realized_cdr[i];
    if (!std::isfinite(b.cdr_db) || centers[i] < 300 || centers[i] > 5000) continue;
    CHECK(b.cdr_db == doctest::Approx(targets[i]).epsilon(0.15));
    ++checked;
  }
  CHECK(checked > 5);
}

TEST_CASE("reverberant mixture is exactly additive") {
  const auto clean = speech_like(2.0, 16000.0, 35);
  RoomSpec room = small_room();
  const ImpulseResponse r1 = simulate_rir(room, 0);
  const ImpulseResponse r2 = simulate_rir(room, 1);
  const ReverbMixture mix = reverberant_mixture(clean, r1, r2, 0.05);
  for (size_t i = 0; i < mix.x1.size(); i += 173) {
    CHECK(mix.x1[i] == mix.early1[i] + mix.late1[i]);
    CHECK(mix.x2[i] == mix.early2[i] + mix.late2[i]);
  }
}

TEST_CASE("pure impulse RIR passes the signal through") {
  const auto clean = speech_like(1.0, 16000.0, 36);
  ImpulseResponse imp;
  imp.sample_rate = 16000;
  imp.samples.assign(64, 0.0);
  imp.samples[0] = 1.0;
  const ReverbMixture mix = reverberant_mixture(clean, imp, imp, 0.05);
  for (size_t i = 0; i < clean.size(); i += 97)
    CHECK(mix.x1[i] == doctest::Approx(clean[i]).epsilon(1e-12));
  CHECK(energy(mix.late1) == 0.0);
}

TEST_CASE("speech-like signal is nonstationary and reproducible") {
  const auto a = speech_like(4.0, 16000.0, 77);
  const auto b = speech_like(4.0, 16000.0, 77);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); i += 101) CHECK(a[i] == b[i]);

  // frame energies must vary strongly (pauses vs. active speech)
  std::vector<double> fe;
  for (size_t i = 0; i + 1600 <= a.size(); i += 1600)
    fe.push_back(energy(std::span<const double>(a).subspan(i, 1600)));
  std::sort(fe.begin(), fe.end());
  CHECK(fe.front() < 0.05 * fe.back());
  CHECK(energy(a) > 0.0);
}
