#include <cstdio>
#include <filesystem>

#include <doctest.h>

#include "cdr/rng.hpp"
#include "cdr/wav.hpp"

using namespace cdr;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("wav round trip preserves samples within quantization") {
  Rng rng(1);
  WavData w;
  w.sample_rate = 16000;
  w.channels.resize(2);
  for (auto& ch : w.channels) {
    ch.resize(3001);
    for (double& v : ch) v = 0.8 * std::sin(rng.uniform() * 6.28);
  }

  struct Variant {
    int bits;
    bool flt;
    double tol;
  };
  for (const Variant var : {Variant{16, false, 1.0 / 32768.0},
                            Variant{24, false, 1.0 / 8388608.0},
                            Variant{32, true, 1e-7}}) {
    w.bit_depth = var.bits;
    w.is_float = var.flt;
    const std::string path = temp_path("cdr_wav_test.wav");
    write_wav(path, w);
    const WavData r = read_wav(path);
    CHECK(r.sample_rate == w.sample_rate);
    CHECK(r.bit_depth == var.bits);
    CHECK(r.is_float == var.flt);
    REQUIRE(r.num_channels() == 2);
    REQUIRE(r.num_frames() == 3001);
    double worst = 0.0;
    for (size_t c = 0; c < 2; ++c)
      for (size_t i = 0; i < r.num_frames(); ++i)
        worst = std::max(worst, std::abs(r.channels[c][i] - w.channels[c][i]));
    CHECK(worst <= var.tol);
    std::remove(path.c_str());
  }
}

TEST_CASE("wav errors") {
  CHECK_THROWS(read_wav("/nonexistent/file.wav"));

  const std::string path = temp_path("cdr_wav_bad.wav");
  {
    FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f);
    std::fwrite("not a wav file at all, just text", 1, 32, f);
    std::fclose(f);
  }
  CHECK_THROWS(read_wav(path));
  std::remove(path.c_str());

  WavData w;
  w.bit_depth = 12;  // unsupported
  w.channels = {{0.0, 0.1}};
  CHECK_THROWS(write_wav(temp_path("cdr_wav_bad2.wav"), w));
}

TEST_CASE("pcm clipping is applied on write") {
  WavData w;
  w.sample_rate = 16000;
  w.bit_depth = 16;
  w.channels = {{1.5, -1.5, 0.0}};
  const std::string path = temp_path("cdr_wav_clip.wav");
  write_wav(path, w);
  const WavData r = read_wav(path);
  CHECK(r.channels[0][0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(r.channels[0][1] == doctest::Approx(-1.0));
  CHECK(r.channels[0][2] == 0.0);
  std::remove(path.c_str());
}
