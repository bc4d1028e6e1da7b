#include "cdr/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cdr/coherence.hpp"
#include "cdr/rng.hpp"
#include "cdr/enhancement.hpp"
#include "cdr/filterbank.hpp"
#include "cdr/metrics.hpp"
#include "cdr/wav.hpp"

namespace cdr {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ScenarioError(where + ": expected an object");
  std::string bad;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) bad += (bad.empty() ? "" : ", ") + it.key();
  }
  if (!bad.empty())
    throw ScenarioError(where + ": unknown keys: " + bad);
}

double get_num(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ScenarioError(std::string(key) + ": expected a number");
  return obj[key].get<double>();
}

std::string get_str(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) throw ScenarioError(std::string(key) + ": expected a string");
  return obj[key].get<std::string>();
}

Vec3 parse_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number())
    throw ScenarioError(where + ": expected [x, y, z]");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Excitation parse_excitation(const json& v, const std::string& where) {
  require_keys(v, where, {"kind", "duration", "path"});
  Excitation ex;
  ex.kind = get_str(v, "kind", "speech");
  ex.duration = get_num(v, "duration", 10.0);
  ex.path = get_str(v, "path", "");
  if (ex.kind != "speech" && ex.kind != "noise" && ex.kind != "file")
    throw ScenarioError(where + ".kind: must be speech, noise or file");
  if (ex.kind == "file" && ex.path.empty())
    throw ScenarioError(where + ": kind=file requires a path");
  if (ex.kind != "file" && !(ex.duration > 0))
    throw ScenarioError(where + ": duration must be positive");
  return ex;
}

RoomScenario parse_room(const json& j, double sample_rate) {
  require_keys(j, "scenario",
               {"version", "type", "seed", "sample_rate", "room",
                "stop_threshold_db", "te", "excitation", "outputs"});
  if (!j.contains("room")) throw ScenarioError("room scenario: missing 'room'");
  const json& r = j["room"];
  require_keys(r, "room", {"dims", "beta", "source", "mics", "sound_speed"});

  RoomScenario sc;
  sc.room.sample_rate = sample_rate;
  if (!r.contains("dims")) throw ScenarioError("room: missing dims");
  sc.room.dims = parse_vec3(r["dims"], "room.dims");
  sc.room.sound_speed = get_num(r, "sound_speed", 343.0);

  if (!r.contains("beta")) throw ScenarioError("room: missing beta");
  const json& beta = r["beta"];
  if (beta.is_array() && beta.size() == 6) {
    for (int i = 0; i < 6; ++i) sc.room.beta[i] = beta[i].get<double>();
  } else if (beta.is_object()) {
    require_keys(beta, "room.beta", {"walls", "floor", "ceiling"});
    const double w = get_num(beta, "walls", 0.9);
    const double fl = get_num(beta, "floor", w);
    const double ce = get_num(beta, "ceiling", fl);
    sc.room.beta = {w, w, w, w, fl, ce};
  } else {
    throw ScenarioError("room.beta: expected 6 values or {walls, floor, ceiling}");
  }

  if (!r.contains("source")) throw ScenarioError("room: missing source");
  sc.room.source_pos = parse_vec3(r["source"], "room.source");
  if (!r.contains("mics") || !r["mics"].is_array() || r["mics"].empty())
    throw ScenarioError("room: missing mics");
  for (size_t i = 0; i < r["mics"].size(); ++i)
    sc.room.mic_positions.push_back(parse_vec3(r["mics"][i], "room.mics"));
  sc.room.validate();

  sc.stop_threshold_db = get_num(j, "stop_threshold_db", 60.0);
  sc.te = get_num(j, "te", 0.05);
  if (j.contains("excitation"))
    sc.excitation = parse_excitation(j["excitation"], "excitation");

  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    require_keys(o, "outputs", {"rir", "sidecar", "mixture", "early", "late", "clean"});
    sc.out_rir = get_str(o, "rir", sc.out_rir);
    sc.out_sidecar = get_str(o, "sidecar", sc.out_sidecar);
    sc.out_mixture = get_str(o, "mixture", "");
    sc.out_early = get_str(o, "early", "");
    sc.out_late = get_str(o, "late", "");
    sc.out_clean = get_str(o, "clean", "");
  }
  if ((!sc.out_mixture.empty() || !sc.out_early.empty()) && !sc.excitation)
    throw ScenarioError("room scenario: mixture outputs need an excitation");
  return sc;
}

MixtureScenario parse_mixture(const json& j) {
  require_keys(j, "scenario",
               {"version", "type", "seed", "sample_rate", "mixture", "outputs"});
  if (!j.contains("mixture")) throw ScenarioError("mixture scenario: missing 'mixture'");
  const json& m = j["mixture"];
  require_keys(m, "mixture",
               {"doa_deg", "target_cdr_db", "band_targets_db", "mic_distance",
                "sound_speed", "clean"});
  MixtureScenario sc;
  sc.doa_deg = get_num(m, "doa_deg", 0.0);
  sc.target_cdr_db = get_num(m, "target_cdr_db", 0.0);
  if (m.contains("band_targets_db")) {
    if (!m["band_targets_db"].is_array())
      throw ScenarioError("mixture.band_targets_db: expected an array");
    sc.band_targets_db = m["band_targets_db"].get<std::vector<double>>();
  }
  sc.mic_distance = get_num(m, "mic_distance", 0.08);
  sc.sound_speed = get_num(m, "sound_speed", 343.0);
  if (m.contains("clean")) sc.clean = parse_excitation(m["clean"], "mixture.clean");

  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    require_keys(o, "outputs", {"mixture", "sidecar", "clean"});
    sc.out_mixture = get_str(o, "mixture", sc.out_mixture);
    sc.out_sidecar = get_str(o, "sidecar", sc.out_sidecar);
    sc.out_clean = get_str(o, "clean", "");
  }
  return sc;
}

IsotropicScenario parse_isotropic(const json& j) {
  require_keys(j, "scenario",
               {"version", "type", "seed", "sample_rate", "isotropic", "outputs"});
  if (!j.contains("isotropic"))
    throw ScenarioError("isotropic scenario: missing 'isotropic'");
  const json& iso = j["isotropic"];
  require_keys(iso, "isotropic",
               {"field", "num_sources", "duration", "mics", "mic_distance",
                "num_mics", "sound_speed"});
  IsotropicScenario sc;
  const std::string field = get_str(iso, "field", "spherical");
  if (field == "spherical")
    sc.field = IsotropicField::kSpherical;
  else if (field == "cylindrical")
    sc.field = IsotropicField::kCylindrical;
  else
    throw ScenarioError("isotropic.field: must be spherical or cylindrical");
  sc.num_sources = static_cast<int>(get_num(iso, "num_sources", 360));
  sc.duration = get_num(iso, "duration", 10.0);
  sc.sound_speed = get_num(iso, "sound_speed", 343.0);
  if (iso.contains("mics")) {
    for (size_t i = 0; i < iso["mics"].size(); ++i)
      sc.mics.push_back(parse_vec3(iso["mics"][i], "isotropic.mics"));
  } else {
    // uniform linear array on the x axis
    const double d = get_num(iso, "mic_distance", 0.08);
    const int n = static_cast<int>(get_num(iso, "num_mics", 2));
    if (n < 2) throw ScenarioError("isotropic.num_mics: need at least 2");
    for (int i = 0; i < n; ++i)
      sc.mics.push_back({(i - (n - 1) / 2.0) * d, 0.0, 0.0});
  }
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    require_keys(o, "outputs", {"noise", "sidecar"});
    sc.out_noise = get_str(o, "noise", sc.out_noise);
    sc.out_sidecar = get_str(o, "sidecar", sc.out_sidecar);
  }
  return sc;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ScenarioError("scenario: expected a JSON object");
  Scenario sc;
  sc.version = static_cast<int>(get_num(j, "version", 1));
  if (sc.version != 1) throw ScenarioError("scenario: unsupported version");
  sc.seed = static_cast<std::uint64_t>(get_num(j, "seed", 0));
  sc.sample_rate = get_num(j, "sample_rate", 16000.0);
  const std::string type = get_str(j, "type", "");
  if (type == "room")
    sc.body = parse_room(j, sc.sample_rate);
  else if (type == "mixture")
    sc.body = parse_mixture(j);
  else if (type == "isotropic")
    sc.body = parse_isotropic(j);
  else
    throw ScenarioError("scenario.type: must be room, mixture or isotropic");
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ScenarioError("scenario: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return parse_scenario(text);
}

std::vector<double> make_excitation(const Excitation& ex, double sample_rate,
                                    std::uint64_t seed) {
  if (ex.kind == "speech") return speech_like(ex.duration, sample_rate, seed);
  if (ex.kind == "noise") {
    Rng rng(seed);
    std::vector<double> x(static_cast<size_t>(ex.duration * sample_rate));
    for (double& v : x) v = 0.2 * rng.gaussian();
    return x;
  }
  WavData w = read_wav(ex.path);
  if (std::abs(w.sample_rate - sample_rate) > 1e-6)
    throw std::runtime_error("excitation file sample rate mismatch (no resampling)");
  return w.channels[0];
}

namespace {

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

void write_channels(const std::string& path, double fs,
                    const std::vector<std::vector<double>>& channels) {
  WavData w;
  w.sample_rate = fs;
  w.bit_depth = 32;
  w.is_float = true;
  w.channels = channels;
  write_wav(path, w);
}

std::string run_room(const Scenario& sc, const RoomScenario& rs,
                     const std::filesystem::path& dir) {
  const double fs = sc.sample_rate;
  std::vector<ImpulseResponse> rirs;
  for (size_t m = 0; m < rs.room.mic_positions.size(); ++m)
    rirs.push_back(simulate_rir(rs.room, m, rs.stop_threshold_db));

  size_t max_len = 0;
  for (const auto& r : rirs) max_len = std::max(max_len, r.samples.size());
  std::vector<std::vector<double>> chans;
  for (auto& r : rirs) {
    r.samples.resize(max_len, 0.0);
    chans.push_back(r.samples);
  }
  write_channels((dir / rs.out_rir).string(), fs, chans);

  json side;
  side["version"] = 1;
  side["type"] = "room";
  side["sample_rate"] = fs;
  side["seed"] = sc.seed;
  side["te"] = rs.te;
  side["dims"] = vec3_json(rs.room.dims);
  side["beta"] = rs.room.beta;
  side["source"] = vec3_json(rs.room.source_pos);
  json mics = json::array();
  for (const auto& m : rs.room.mic_positions) mics.push_back(vec3_json(m));
  side["mics"] = mics;
  side["rir"] = rs.out_rir;
  try {
    side["t60_s"] = t60_from_edc(rirs[0]);
  } catch (const std::exception&) {
    side["t60_s"] = nullptr;  // e.g. free field
  }
  // geometric TDOA of the direct path between the first two mics
  if (rs.room.mic_positions.size() >= 2) {
    const double d1 = distance(rs.room.source_pos, rs.room.mic_positions[0]);
    const double d2 = distance(rs.room.source_pos, rs.room.mic_positions[1]);
    side["tdoa_s"] = (d2 - d1) / rs.room.sound_speed;
    side["mic_distance"] =
        distance(rs.room.mic_positions[0], rs.room.mic_positions[1]);
  }

  if (rs.excitation) {
    if (rirs.size() < 2)
      throw ScenarioError("room scenario: mixture outputs need at least 2 mics");
    const auto clean = make_excitation(*rs.excitation, fs, sc.seed);
    const ReverbMixture mix =
        reverberant_mixture(clean, rirs[0], rirs[1], rs.te);
    if (!rs.out_mixture.empty())
      write_channels((dir / rs.out_mixture).string(), fs, {mix.x1, mix.x2});
    if (!rs.out_early.empty())
      write_channels((dir / rs.out_early).string(), fs, {mix.early1, mix.early2});
    if (!rs.out_late.empty())
      write_channels((dir / rs.out_late).string(), fs, {mix.late1, mix.late2});
    if (!rs.out_clean.empty())
      write_channels((dir / rs.out_clean).string(), fs, {clean});

    // realized scalar ELR of the unprocessed mixture
    FilterbankConfig fb;
    fb.sample_rate = fs;
    fb.prototype = design_prototype(fb);
    const Spectrogram e = preprocess(analyze(mix.early1, fb), analyze(mix.early2, fb));
    const Spectrogram l = preprocess(analyze(mix.late1, fb), analyze(mix.late2, fb));
    side["elr_db"] = elr_scalar_db(elr(e, l, 0.68, rs.te));
    side["mixture"] = rs.out_mixture;
    side["early"] = rs.out_early;
    side["late"] = rs.out_late;
    side["clean"] = rs.out_clean;
  }
  return side.dump(2);
}

std::string run_mixture(const Scenario& sc, const MixtureScenario& ms,
                        const std::filesystem::path& dir) {
  const double fs = sc.sample_rate;
  const auto clean = make_excitation(ms.clean, fs, sc.seed);
  const double theta = ms.doa_deg * M_PI / 180.0;
  const MixtureResult mix =
      make_mixture(clean, theta, ms.target_cdr_db, ms.mic_distance, ms.sound_speed,
                   fs, sc.seed + 1, ms.band_targets_db);
  write_channels((dir / ms.out_mixture).string(), fs, {mix.x1, mix.x2});
  if (!ms.out_clean.empty())
    write_channels((dir / ms.out_clean).string(), fs, {clean});

  json side;
  side["version"] = 1;
  side["type"] = "mixture";
  side["sample_rate"] = fs;
  side["seed"] = sc.seed;
  side["doa_deg"] = ms.doa_deg;
  side["tdoa_s"] = tdoa_from_doa(theta, ms.mic_distance, ms.sound_speed);
  side["mic_distance"] = ms.mic_distance;
  side["target_cdr_db"] = ms.target_cdr_db;
  json bands = json::array();
  for (const auto& b : mix.realized_cdr) {
    json jb;
    jb["f_lo"] = b.f_lo;
    jb["f_hi"] = b.f_hi;
    jb["cdr_db"] = std::isfinite(b.cdr_db) ? json(b.cdr_db) : json(nullptr);
    bands.push_back(jb);
  }
  side["realized_cdr"] = bands;
  side["mixture"] = ms.out_mixture;
  return side.dump(2);
}

std::string run_isotropic(const Scenario& sc, const IsotropicScenario& is,
                          const std::filesystem::path& dir) {
  const double fs = sc.sample_rate;
  const auto noise = synthesize_isotropic(is.field, is.num_sources, is.mics,
                                          is.duration, fs, is.sound_speed, sc.seed);
  write_channels((dir / is.out_noise).string(), fs, noise);
  json side;
  side["version"] = 1;
  side["type"] = "isotropic";
  side["sample_rate"] = fs;
  side["seed"] = sc.seed;
  side["field"] = is.field == IsotropicField::kSpherical ? "spherical" : "cylindrical";
  side["num_sources"] = is.num_sources;
  json mics = json::array();
  for (const auto& m : is.mics) mics.push_back(vec3_json(m));
  side["mics"] = mics;
  side["noise"] = is.out_noise;
  return side.dump(2);
}

}  // namespace

std::string run_scenario(const Scenario& sc, const std::string& out_dir) {
  const std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(dir);

  std::string sidecar_text;
  std::string sidecar_path;
  if (const auto* rs = std::get_if<RoomScenario>(&sc.body)) {
    sidecar_text = run_room(sc, *rs, dir);
    sidecar_path = (dir / rs->out_sidecar).string();
  } else if (const auto* ms = std::get_if<MixtureScenario>(&sc.body)) {
    sidecar_text = run_mixture(sc, *ms, dir);
    sidecar_path = (dir / ms->out_sidecar).string();
  } else {
    const auto& is = std::get<IsotropicScenario>(sc.body);
    sidecar_text = run_isotropic(sc, is, dir);
    sidecar_path = (dir / is.out_sidecar).string();
  }
  std::ofstream f(sidecar_path);
  if (!f) throw std::runtime_error("scenario: cannot write " + sidecar_path);
  f << sidecar_text << "\n";
  return sidecar_text;
}

}  // namespace cdr
