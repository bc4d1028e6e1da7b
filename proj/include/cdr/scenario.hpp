#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cdr/simulator.hpp"

namespace cdr {

/// Schema violation; the message lists the offending keys.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Synthetic excitation or a user-supplied file.
struct Excitation {
  std::string kind = "speech";  ///< speech | noise | file
  double duration = 10.0;       ///< seconds, for synthetic kinds
  std::string path;             ///< for kind == file
};

struct RoomScenario {
  RoomSpec room;
  double stop_threshold_db = 60.0;
  double te = 0.05;
  std::optional<Excitation> excitation;  ///< enables mixture/early/late outputs
  std::string out_rir = "rir.wav";
  std::string out_sidecar = "sidecar.json";
  std::string out_mixture;  ///< first two mics; empty = skip
  std::string out_early;
  std::string out_late;
  std::string out_clean;
};

struct MixtureScenario {
  double doa_deg = 0.0;
  double target_cdr_db = 0.0;
  std::optional<std::vector<double>> band_targets_db;  ///< 19 third-octave values
  double mic_distance = 0.08;
  double sound_speed = 343.0;
  Excitation clean;
  std::string out_mixture = "mixture.wav";
  std::string out_sidecar = "sidecar.json";
  std::string out_clean;
};

struct IsotropicScenario {
  IsotropicField field = IsotropicField::kSpherical;
  int num_sources = 360;
  double duration = 10.0;
  std::vector<Vec3> mics;
  double sound_speed = 343.0;
  std::string out_noise = "noise.wav";
  std::string out_sidecar = "sidecar.json";
};

struct Scenario {
  int version = 1;
  std::uint64_t seed = 0;  ///< missing seed defaults to 0
  double sample_rate = 16000.0;
  std::variant<RoomScenario, MixtureScenario, IsotropicScenario> body;
};

/// Parse and validate scenario JSON. Unknown keys are rejected.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

/// Generate all outputs of a scenario under out_dir; returns the sidecar JSON
/// (also written to the sidecar path). Deterministic given the seed.
std::string run_scenario(const Scenario& sc, const std::string& out_dir);

/// Build the excitation signal (deterministic for synthetic kinds).
std::vector<double> make_excitation(const Excitation& ex, double sample_rate,
                                    std::uint64_t seed);

}  // namespace cdr
