#include "cdr/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdr/coherence.hpp"
#include "cdr/fft.hpp"
#include "cdr/enhancement.hpp"
#include "cdr/estimators.hpp"
#include "cdr/filterbank.hpp"
#include "cdr/metrics.hpp"
#include "cdr/scenario.hpp"
#include "cdr/simulator.hpp"
#include "cdr/wav.hpp"

namespace cdr {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct EstimatorFlags {
  std::string estimator = "prop3";
  std::string noise_model = "diffuse";
  double mu = 1.3;
  double g_min = 0.1;
  double lambda = 0.68;
  double mic_distance = 0.08;
  double sound_speed = 343.0;
  std::optional<double> tdoa;
  std::optional<double> doa_deg;

  void add_to(CLI::App& cmd, bool with_gain_params = true) {
    cmd.add_option("--estimator", estimator,
                   "jeub|thiergart1|thiergart2|prop1|prop2|prop2u|prop3|prop4")
        ->capture_default_str();
    cmd.add_option("--noise-model", noise_model, "diffuse|2d-iso")
        ->capture_default_str();
    cmd.add_option("--mic-distance", mic_distance, "microphone spacing [m]")
        ->capture_default_str();
    cmd.add_option("--sound-speed", sound_speed, "speed of sound [m/s]")
        ->capture_default_str();
    auto* t = cmd.add_option_function<double>(
        "--tdoa", [this](double v) { tdoa = v; }, "direct-path TDOA [s]");
    cmd.add_option_function<double>(
           "--doa", [this](double v) { doa_deg = v; },
           "direct-path DOA [deg], 0 = broadside")
        ->excludes(t);
    if (with_gain_params) {
      cmd.add_option("--mu", mu, "oversubtraction factor")->capture_default_str();
      cmd.add_option("--gmin", g_min, "gain floor")->capture_default_str();
      cmd.add_option("--lambda", lambda, "PSD forgetting factor")
          ->capture_default_str();
    }
  }

  PostfilterConfig to_config() const {
    PostfilterConfig cfg;
    const auto est = estimator_from_string(estimator);
    if (!est) throw std::invalid_argument("unknown estimator: " + estimator);
    cfg.estimator = *est;
    if (noise_model == "diffuse")
      cfg.noise_model = NoiseModel::kDiffuse;
    else if (noise_model == "2d-iso")
      cfg.noise_model = NoiseModel::k2dIsotropic;
    else
      throw std::invalid_argument("unknown noise model: " + noise_model);
    cfg.mu = mu;
    cfg.g_min = g_min;
    cfg.lambda = lambda;
    cfg.mic_distance = mic_distance;
    cfg.sound_speed = sound_speed;
    if (tdoa)
      cfg.tdoa = *tdoa;
    else if (doa_deg)
      cfg.tdoa = tdoa_from_doa(*doa_deg * M_PI / 180.0, mic_distance, sound_speed);
    cfg.validate();
    return cfg;
  }
};

void write_telemetry_csv(const std::string& path, const Telemetry& tm,
                         double cap_db) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "frame,bin,freq_hz,cdr_db,diffuseness,gain\n";
  for (size_t l = 0; l < tm.frames; ++l)
    for (size_t b = 0; b < tm.bins; ++b) {
      const size_t i = l * tm.bins + b;
      f << l << ',' << b << ',' << fmt(tm.freq_hz[b]) << ','
        << fmt(cdr_to_db(tm.cdr[i], cap_db)) << ',' << fmt(diffuseness(tm.cdr[i]))
        << ',' << fmt(tm.gain[i]) << '\n';
    }
}

// ---------------------------------------------------------------- dereverb

int cmd_dereverb(const std::string& in_path, const std::string& out_path,
                 const EstimatorFlags& flags, const std::string& telemetry_path,
                 double cap_db) {
  const PostfilterConfig cfg = flags.to_config();  // throws usage errors
  WavData in;
  try {
    in = read_wav(in_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  if (in.num_channels() != 2) {
    std::cerr << "error: dereverb needs a 2-channel input, got "
              << in.num_channels() << "\n";
    return kExitInput;
  }
  if (std::abs(in.sample_rate - 16000.0) > 1e-6) {
    std::cerr << "error: expected 16 kHz input, got " << in.sample_rate
              << " Hz (no implicit resampling)\n";
    return kExitInput;
  }

  FilterbankConfig fb;
  fb.sample_rate = in.sample_rate;
  const DereverbResult res = dereverberate(in.channels[0], in.channels[1], cfg, fb,
                                           !telemetry_path.empty());

  WavData out;
  out.sample_rate = in.sample_rate;
  out.bit_depth = in.bit_depth;
  out.is_float = in.is_float;
  out.channels = {res.output};
  write_wav(out_path, out);
  if (!telemetry_path.empty())
    write_telemetry_csv(telemetry_path, res.telemetry, cap_db);

  std::cout << "frames: " << res.frames << "\n"
            << "latency_samples: " << res.delay_samples << "\n"
            << "mean_gain: " << fmt(res.mean_gain) << "\n"
            << "output: " << out_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir) {
  const Scenario sc = load_scenario(scenario_path);  // throws ScenarioError
  const std::string sidecar = run_scenario(sc, out_dir);
  std::cout << sidecar << "\n";
  return kExitOk;
}

// ------------------------------------------------------- analyze-coherence

struct CoherenceArgs {
  std::string input_wav;  ///< multichannel signal
  std::string rir_wav;    ///< multichannel RIR; tails excited with noise
  double te = 0.05;
  int pairs = 0;  ///< 0 = all adjacent pairs
  double duration = 10.0;
  std::uint64_t seed = 0;
  double mic_distance = 0.08;
  double sound_speed = 343.0;
  std::string out_csv = "coherence.csv";
  bool classify = false;
  double classify_freq = 1000.0;
  double elr_threshold_db = 10.0;
  std::string clean_kind = "speech";
};

// Pair-averaged coherence of adjacent channels over whole signals.
std::vector<std::complex<double>> pair_averaged_coherence(
    const std::vector<std::vector<double>>& chans, int pairs,
    const FilterbankConfig& fb) {
  const int n_pairs = pairs > 0 ? pairs : static_cast<int>(chans.size()) - 1;
  if (n_pairs < 1 || n_pairs + 1 > static_cast<int>(chans.size()))
    throw std::invalid_argument("analyze-coherence: not enough channels for pairs");
  std::vector<Spectrogram> specs;
  for (const auto& ch : chans) specs.push_back(analyze(ch, fb));

  std::vector<std::complex<double>> acc(fb.bins(), {0.0, 0.0});
  for (int p = 0; p < n_pairs; ++p) {
    const CrossSpectra cs = average_cross_spectra(specs[p], specs[p + 1]);
    const CoherenceField f = estimate_coherence(cs);
    for (int b = 0; b < fb.bins(); ++b) acc[b] += f.gamma[b];
  }
  for (auto& v : acc) v /= static_cast<double>(n_pairs);
  return acc;
}

int cmd_analyze_coherence(const CoherenceArgs& args) {
  FilterbankConfig fb;
  fb.prototype = design_prototype(fb);

  std::vector<std::vector<double>> signals;
  double tdoa_for_model = 0.0;
  ElrField elr_field;
  Spectrogram mix1, mix2;

  if (!args.input_wav.empty()) {
    WavData w;
    try {
      w = read_wav(args.input_wav);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitInput;
    }
    if (std::abs(w.sample_rate - fb.sample_rate) > 1e-6) {
      std::cerr << "error: expected 16 kHz input\n";
      return kExitInput;
    }
    if (w.num_channels() < 2) {
      std::cerr << "error: need at least 2 channels\n";
      return kExitInput;
    }
    signals = w.channels;
  } else if (!args.rir_wav.empty()) {
    WavData w;
    try {
      w = read_wav(args.rir_wav);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitInput;
    }
    if (w.num_channels() < 2) {
      std::cerr << "error: RIR file needs at least 2 channels\n";
      return kExitInput;
    }
    Excitation ex;
    ex.kind = args.classify ? args.clean_kind : "noise";
    ex.duration = args.duration;
    const auto excitation = make_excitation(ex, fb.sample_rate, args.seed);

    if (args.classify) {
      ImpulseResponse r1{w.channels[0], w.sample_rate, args.te};
      ImpulseResponse r2{w.channels[1], w.sample_rate, args.te};
      const ReverbMixture mix = reverberant_mixture(excitation, r1, r2, args.te);
      mix1 = analyze(mix.x1, fb);
      mix2 = analyze(mix.x2, fb);
      const Spectrogram e = preprocess(analyze(mix.early1, fb), analyze(mix.early2, fb));
      const Spectrogram l = preprocess(analyze(mix.late1, fb), analyze(mix.late2, fb));
      elr_field = elr(e, l, 0.68, args.te);
      const size_t peak1 = direct_path_peak(r1), peak2 = direct_path_peak(r2);
      tdoa_for_model =
          (static_cast<double>(peak2) - static_cast<double>(peak1)) / w.sample_rate;
    } else {
      // coherence of the reverberation tail (late RIR part)
      for (size_t c = 0; c < w.num_channels(); ++c) {
        ImpulseResponse r{w.channels[c], w.sample_rate, args.te};
        auto [early, late] = split_rir(r, args.te);
        signals.push_back(fft_convolve(excitation, late.samples));
      }
    }
  } else {
    std::cerr << "error: need --input or --rir\n";
    return kExitUsage;
  }

  std::ofstream f(args.out_csv);
  if (!f) {
    std::cerr << "error: cannot write " << args.out_csv << "\n";
    return kExitInput;
  }

  if (!args.classify) {
    const auto gamma = pair_averaged_coherence(signals, args.pairs, fb);
    const auto freqs = fb.freq_grid();
    const auto sinc_model = model_diffuse(args.mic_distance, freqs, args.sound_speed);
    const auto j0_model =
        model_2d_isotropic(args.mic_distance, freqs, args.sound_speed);
    f << "freq_hz,re_gamma,im_gamma,model_diffuse,model_2d_iso\n";
    for (int b = 0; b < fb.bins(); ++b)
      f << fmt(freqs[b]) << ',' << fmt(gamma[b].real()) << ',' << fmt(gamma[b].imag())
        << ',' << fmt(sinc_model[b]) << ',' << fmt(j0_model[b]) << '\n';
    std::cout << "wrote " << args.out_csv << "\n";
    return kExitOk;
  }

  // classify mode: 2-D histogram of per-frame coherence near classify_freq,
  // split into high-ELR (> threshold) and low-ELR (< -threshold) bins
  const int bin =
      static_cast<int>(std::round(args.classify_freq / fb.sample_rate * fb.fft_size));
  if (bin < 0 || bin >= fb.bins()) {
    std::cerr << "error: --freq out of range\n";
    return kExitUsage;
  }
  constexpr int kGrid = 41;
  std::vector<int> hist_high(kGrid * kGrid, 0), hist_low(kGrid * kGrid, 0);
  CrossSpectra psd = CrossSpectra::zeros(mix1.bins, 0.68);
  for (size_t l = 0; l < mix1.frames; ++l) {
    psd = update_psd(psd, mix1.frame(l), mix2.frame(l));
    const CoherenceField g = estimate_coherence(psd);
    for (int b2 = bin - 1; b2 <= bin + 1; ++b2) {
      if (b2 < 0 || b2 >= static_cast<int>(mix1.bins)) continue;
      const size_t i = l * elr_field.bins + b2;
      if (!g.valid[b2] || !elr_field.valid[i]) continue;
      const double e_db = elr_field.elr_db[i];
      const std::complex<double> v = g.gamma[b2];
      const int ix = std::clamp(
          static_cast<int>((v.real() + 1.0) / 2.0 * (kGrid - 1) + 0.5), 0, kGrid - 1);
      const int iy = std::clamp(
          static_cast<int>((v.imag() + 1.0) / 2.0 * (kGrid - 1) + 0.5), 0, kGrid - 1);
      if (e_db > args.elr_threshold_db) hist_high[iy * kGrid + ix]++;
      if (e_db < -args.elr_threshold_db) hist_low[iy * kGrid + ix]++;
    }
  }
  const auto freqs = fb.freq_grid();
  const auto gs = model_plane_wave(tdoa_for_model, freqs);
  const auto gn = model_diffuse(args.mic_distance, freqs, args.sound_speed);
  f << "# gamma_s_re=" << fmt(gs[bin].real()) << " gamma_s_im=" << fmt(gs[bin].imag())
    << " gamma_n=" << fmt(gn[bin]) << " freq_hz=" << fmt(freqs[bin]) << "\n";
  f << "re,im,count_high_elr,count_low_elr\n";
  for (int iy = 0; iy < kGrid; ++iy)
    for (int ix = 0; ix < kGrid; ++ix) {
      const double re = -1.0 + 2.0 * ix / (kGrid - 1);
      const double im = -1.0 + 2.0 * iy / (kGrid - 1);
      f << fmt(re) << ',' << fmt(im) << ',' << hist_high[iy * kGrid + ix] << ','
        << hist_low[iy * kGrid + ix] << '\n';
    }
  std::cout << "wrote " << args.out_csv << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- sweep-bias

struct SweepArgs {
  std::vector<std::string> estimators;
  double mic_distance = 0.08;
  double sound_speed = 343.0;
  std::vector<double> freqs_hz{125, 250, 500, 1000, 2000, 4000, 8000};
  std::string tdoa_policy = "fifth-period";  ///< zero | fifth-period | endfire
  double cdr_min_db = -30.0, cdr_max_db = 30.0, cdr_step_db = 1.0;
  std::string mode = "bias";  ///< bias | noise-error | phase-error
  double fixed_cdr_db = 10.0;
  std::string out_csv = "sweep.csv";
};

double policy_tdoa(const std::string& policy, double f, double d, double c) {
  if (policy == "zero") return 0.0;
  if (policy == "fifth-period") return 1.0 / (5.0 * f);
  if (policy == "endfire") return d / c;
  throw std::invalid_argument("unknown tdoa policy: " + policy);
}

int cmd_sweep_bias(const SweepArgs& args) {
  std::vector<Estimator> ests;
  if (args.estimators.empty()) {
    ests = all_estimators();
  } else {
    for (const auto& name : args.estimators) {
      const auto e = estimator_from_string(name);
      if (!e) throw std::invalid_argument("unknown estimator: " + name);
      ests.push_back(*e);
    }
  }

  std::ofstream f(args.out_csv);
  if (!f) {
    std::cerr << "error: cannot write " << args.out_csv << "\n";
    return kExitInput;
  }
  f << "estimator,f_hz,tdoa_s,gamma_n_error,gamma_s_phase_error,cdr_true_db,"
       "cdr_est_db\n";

  const double cap = 100.0;
  auto emit = [&](Estimator e, double fhz, double dt, double gn_err, double ph_err,
                  double true_db, double est_db) {
    f << to_string(e) << ',' << fmt(fhz) << ',' << fmt(dt) << ',' << fmt(gn_err)
      << ',' << fmt(ph_err) << ',' << fmt(true_db) << ',' << fmt(est_db) << '\n';
  };

  for (double fhz : args.freqs_hz) {
    const double dt = policy_tdoa(args.tdoa_policy, fhz, args.mic_distance,
                                  args.sound_speed);
    const double kd = 2.0 * M_PI * fhz * args.mic_distance / args.sound_speed;
    const double gn = (std::abs(kd) < 1e-12) ? 1.0 : std::sin(kd) / kd;
    const double phase = 2.0 * M_PI * fhz * dt;
    const std::complex<double> gs{std::cos(phase), std::sin(phase)};

    if (args.mode == "bias") {
      for (double db = args.cdr_min_db; db <= args.cdr_max_db + 1e-9;
           db += args.cdr_step_db) {
        const double cdr = std::pow(10.0, db / 10.0);
        const std::complex<double> gx = mix_coherence(cdr, gs, gn);
        for (Estimator e : ests)
          emit(e, fhz, dt, 0.0, 0.0, db, cdr_to_db(estimate_cdr(e, gx, gs, gn), cap));
      }
    } else {
      const double cdr = std::pow(10.0, args.fixed_cdr_db / 10.0);
      const std::complex<double> gx = mix_coherence(cdr, gs, gn);
      const int steps = 101;
      for (int i = 0; i < steps; ++i) {
        if (args.mode == "noise-error") {
          const double err = -0.3 + 0.6 * i / (steps - 1);
          const double gn_model = std::clamp(gn + err, -1.0, 1.0);
          for (Estimator e : ests)
            emit(e, fhz, dt, err, 0.0, args.fixed_cdr_db,
                 cdr_to_db(estimate_cdr(e, gx, gs, gn_model), cap));
        } else if (args.mode == "phase-error") {
          const double err = -M_PI / 2.0 + M_PI * i / (steps - 1);
          const std::complex<double> gs_model{std::cos(phase + err),
                                              std::sin(phase + err)};
          for (Estimator e : ests)
            emit(e, fhz, dt, 0.0, err, args.fixed_cdr_db,
                 cdr_to_db(estimate_cdr(e, gx, gs_model, gn), cap));
        } else {
          throw std::invalid_argument("unknown sweep mode: " + args.mode);
        }
      }
    }
  }
  std::cout << "wrote " << args.out_csv << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string clean_wav;
  std::string rir_wav;
  std::string sidecar;
  std::string processed_wav;
  std::string report_path;
  double te = 0.05;
  bool all_estimators = false;
  EstimatorFlags flags;
};

int cmd_evaluate(EvaluateArgs& args) {
  double te = args.te;
  std::string rir_path = args.rir_wav;

  if (!args.sidecar.empty()) {
    std::ifstream sf(args.sidecar);
    if (!sf) {
      std::cerr << "error: cannot open " << args.sidecar << "\n";
      return kExitInput;
    }
    json side;
    try {
      side = json::parse(sf);
    } catch (const json::parse_error& e) {
      std::cerr << "error: sidecar: " << e.what() << "\n";
      return kExitSchema;
    }
    const auto dir = std::filesystem::path(args.sidecar).parent_path();
    if (rir_path.empty() && side.contains("rir"))
      rir_path = (dir / side["rir"].get<std::string>()).string();
    if (side.contains("te")) te = side["te"].get<double>();
    if (!args.flags.tdoa && !args.flags.doa_deg && side.contains("tdoa_s"))
      args.flags.tdoa = side["tdoa_s"].get<double>();
    if (side.contains("mic_distance"))
      args.flags.mic_distance = side["mic_distance"].get<double>();
  }
  if (args.clean_wav.empty() || rir_path.empty()) {
    std::cerr << "error: evaluate needs --clean and --rir (or --sidecar)\n";
    return kExitUsage;
  }

  const PostfilterConfig cfg = args.flags.to_config();

  WavData clean, rir;
  try {
    clean = read_wav(args.clean_wav);
    rir = read_wav(rir_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  if (rir.num_channels() < 2) {
    std::cerr << "error: RIR file needs at least 2 channels\n";
    return kExitInput;
  }
  if (std::abs(clean.sample_rate - rir.sample_rate) > 1e-6) {
    std::cerr << "error: clean/RIR sample rate mismatch (no resampling)\n";
    return kExitInput;
  }
  const double fs = clean.sample_rate;

  ImpulseResponse r1{rir.channels[0], fs, te};
  ImpulseResponse r2{rir.channels[1], fs, te};
  const ReverbMixture mix = reverberant_mixture(clean.channels[0], r1, r2, te);

  FilterbankConfig fb;
  fb.sample_rate = fs;
  fb.prototype = design_prototype(fb);

  const DereverbResult res = dereverberate(mix.x1, mix.x2, cfg, fb, true);

  const Spectrogram spec_e =
      preprocess(analyze(mix.early1, fb), analyze(mix.early2, fb));
  const Spectrogram spec_l =
      preprocess(analyze(mix.late1, fb), analyze(mix.late2, fb));

  const ElrField elr_before = elr(spec_e, spec_l, cfg.lambda, te);
  const ElrField elr_after = elr(apply_gains(spec_e, res.telemetry),
                                 apply_gains(spec_l, res.telemetry), cfg.lambda, te);

  const std::vector<double> ye = synthesize(spec_e, fb);
  const std::vector<double> ze = synthesize(apply_gains(spec_e, res.telemetry), fb);

  json report;
  report["estimator"] = to_string(cfg.estimator);
  report["te_s"] = te;
  report["elr_unprocessed_db"] = elr_scalar_db(elr_before);
  report["elr_processed_db"] = elr_scalar_db(elr_after);
  report["elr_improvement_db"] =
      elr_scalar_db(elr_after) - elr_scalar_db(elr_before);
  report["fwsegsdr_db"] = fwsegsnr(ye, ze, fs);
  report["mean_gain"] = res.mean_gain;

  if (!args.processed_wav.empty()) {
    WavData proc;
    try {
      proc = read_wav(args.processed_wav);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitInput;
    }
    if (proc.num_frames() != res.output.size() ||
        std::abs(proc.sample_rate - fs) > 1e-6) {
      std::cerr << "error: processed file does not match the pipeline output "
                   "(length or sample rate)\n";
      return kExitInput;
    }
    double err = 0.0, ref = 0.0;
    for (size_t i = 0; i < res.output.size(); ++i) {
      const double d = proc.channels[0][i] - res.output[i];
      err += d * d;
      ref += res.output[i] * res.output[i];
    }
    report["processed_match_db"] =
        (err == 0.0) ? json(nullptr)
                     : json(10.0 * std::log10(err / std::max(ref, 1e-30)));
  }

  if (args.all_estimators) {
    const CdrField truth = cdr_field_from_elr(elr_before);
    json table;
    const auto freqs = fb.freq_grid();
    for (Estimator e : all_estimators()) {
      if (estimator_needs_tdoa(e) && !cfg.tdoa && e != cfg.estimator) continue;
      const CoherenceModels models =
          CoherenceModels::make(freqs, cfg.mic_distance, cfg.sound_speed,
                                cfg.tdoa.value_or(0.0), cfg.noise_model);
      // re-run the PSD recursion once per estimator
      const Spectrogram s1 = analyze(mix.x1, fb);
      const Spectrogram s2 = analyze(mix.x2, fb);
      CrossSpectra psd = CrossSpectra::zeros(s1.bins, cfg.lambda);
      CdrField field;
      field.method = e;
      for (size_t l = 0; l < s1.frames; ++l) {
        psd = update_psd(psd, s1.frame(l), s2.frame(l));
        field.append(estimate_cdr_bins(e, estimate_coherence(psd), models));
      }
      table[to_string(e)] = diffuseness_mse(truth, field);
    }
    report["diffuseness_mse"] = table;
  }

  const std::string text = report.dump(2);
  if (!args.report_path.empty()) {
    std::ofstream rf(args.report_path);
    if (!rf) {
      std::cerr << "error: cannot write " << args.report_path << "\n";
      return kExitInput;
    }
    rf << text << "\n";
  }
  std::cout << text << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Coherent-to-diffuse ratio estimation and dereverberation"};
  app.require_subcommand(1);

  // dereverb
  auto* dv = app.add_subcommand("dereverb", "Dereverberate a 2-channel WAV file");
  std::string in_path, out_path, telemetry_path;
  double cap_db = 100.0;
  dv->add_option("input", in_path, "2-channel 16 kHz WAV")->required();
  dv->add_option("output", out_path, "mono output WAV")->required();
  EstimatorFlags dv_flags;
  dv_flags.add_to(*dv);
  dv->add_option("--telemetry", telemetry_path, "per-bin CDR/gain CSV");
  dv->add_option("--cap-db", cap_db, "dB cap for infinite CDR in exports")
      ->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate RIRs/mixtures from a scenario");
  std::string scenario_path, out_dir = ".";
  sim->add_option("scenario", scenario_path, "scenario JSON file")->required();
  sim->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

  // analyze-coherence
  auto* ac = app.add_subcommand("analyze-coherence",
                                "Estimate spatial coherence vs. model curves");
  CoherenceArgs ac_args;
  ac->add_option("--input", ac_args.input_wav, "multichannel signal WAV");
  ac->add_option("--rir", ac_args.rir_wav, "multichannel RIR WAV (tail coherence)");
  ac->add_option("--te", ac_args.te, "early/late split [s]")->capture_default_str();
  ac->add_option("--pairs", ac_args.pairs, "adjacent pairs to average (0 = all)")
      ->capture_default_str();
  ac->add_option("--duration", ac_args.duration, "excitation length [s]")
      ->capture_default_str();
  ac->add_option("--seed", ac_args.seed, "excitation seed")->capture_default_str();
  ac->add_option("--mic-distance", ac_args.mic_distance, "spacing for model curves")
      ->capture_default_str();
  ac->add_option("--sound-speed", ac_args.sound_speed, "")->capture_default_str();
  ac->add_option("--out", ac_args.out_csv, "output CSV")->capture_default_str();
  ac->add_flag("--classify-elr", ac_args.classify,
               "export coherence histograms for high/low-ELR bins");
  ac->add_option("--freq", ac_args.classify_freq, "histogram center frequency [Hz]")
      ->capture_default_str();
  ac->add_option("--elr-threshold", ac_args.elr_threshold_db,
                 "ELR classification threshold [dB]")
      ->capture_default_str();

  // sweep-bias
  auto* sw = app.add_subcommand("sweep-bias",
                                "True vs. estimated CDR and model-error sweeps");
  SweepArgs sw_args;
  sw->add_option("--estimators", sw_args.estimators, "estimator names (default all)");
  sw->add_option("--mic-distance", sw_args.mic_distance, "")->capture_default_str();
  sw->add_option("--sound-speed", sw_args.sound_speed, "")->capture_default_str();
  sw->add_option("--freqs", sw_args.freqs_hz, "frequency grid [Hz]");
  sw->add_option("--tdoa-policy", sw_args.tdoa_policy, "zero|fifth-period|endfire")
      ->capture_default_str();
  sw->add_option("--cdr-min", sw_args.cdr_min_db, "")->capture_default_str();
  sw->add_option("--cdr-max", sw_args.cdr_max_db, "")->capture_default_str();
  sw->add_option("--cdr-step", sw_args.cdr_step_db, "")->capture_default_str();
  sw->add_option("--mode", sw_args.mode, "bias|noise-error|phase-error")
      ->capture_default_str();
  sw->add_option("--cdr-db", sw_args.fixed_cdr_db, "true CDR for error sweeps")
      ->capture_default_str();
  sw->add_option("--out", sw_args.out_csv, "output CSV")->capture_default_str();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Metric report for a processing chain");
  EvaluateArgs ev_args;
  ev->add_option("--clean", ev_args.clean_wav, "clean source WAV");
  ev->add_option("--rir", ev_args.rir_wav, "2-channel RIR WAV");
  ev->add_option("--sidecar", ev_args.sidecar, "scenario sidecar JSON");
  ev->add_option("--processed", ev_args.processed_wav, "processed WAV to verify");
  ev->add_option("--report", ev_args.report_path, "write JSON report here");
  ev->add_option("--te", ev_args.te, "early/late split [s]")->capture_default_str();
  ev->add_flag("--all-estimators", ev_args.all_estimators,
               "include a per-estimator diffuseness-MSE table");
  ev_args.flags.estimator = "prop2";
  ev_args.flags.add_to(*ev);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (dv->parsed())
      return cmd_dereverb(in_path, out_path, dv_flags, telemetry_path, cap_db);
    if (sim->parsed()) return cmd_simulate(scenario_path, out_dir);
    if (ac->parsed()) return cmd_analyze_coherence(ac_args);
    if (sw->parsed()) return cmd_sweep_bias(sw_args);
    if (ev->parsed()) return cmd_evaluate(ev_args);
  } catch (const ScenarioError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace cdr
