#include "cdr/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cdr {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}
uint16_t rd_u16(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

void wr_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 24) & 0xff);
}
void wr_u16(std::vector<uint8_t>& v, uint16_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
}
void wr_tag(std::vector<uint8_t>& v, const char* tag) {
  v.insert(v.end(), tag, tag + 4);
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav: cannot open " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data = nullptr;
  size_t data_len = 0;
  bool have_fmt = false;

  size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const char* tag = reinterpret_cast<const char*>(raw.data() + pos);
    const uint32_t sz = rd_u32(raw.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + sz > raw.size()) throw std::runtime_error("wav: truncated chunk");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (sz < 16) throw std::runtime_error("wav: bad fmt chunk");
      format = rd_u16(raw.data() + body);
      channels = rd_u16(raw.data() + body + 2);
      rate = rd_u32(raw.data() + body + 4);
      bits = rd_u16(raw.data() + body + 14);
      if (format == 0xFFFE) {  // extensible: subformat GUID's first two bytes
        if (sz < 40) throw std::runtime_error("wav: bad extensible fmt chunk");
        format = rd_u16(raw.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = raw.data() + body;
      data_len = sz;
    }
    pos = body + sz + (sz & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data == nullptr)
    throw std::runtime_error("wav: missing fmt or data chunk: " + path);
  if (channels == 0) throw std::runtime_error("wav: zero channels");

  WavData out;
  out.sample_rate = rate;
  out.channels.resize(channels);

  if (format == 1 && bits == 16) {
    out.bit_depth = 16;
    const size_t frames = data_len / (2 * channels);
    for (auto& ch : out.channels) ch.resize(frames);
    for (size_t i = 0; i < frames; ++i)
      for (int c = 0; c < channels; ++c) {
        const int16_t v =
            static_cast<int16_t>(rd_u16(data + 2 * (i * channels + c)));
        out.channels[c][i] = v / 32768.0;
      }
  } else if (format == 1 && bits == 24) {
    out.bit_depth = 24;
    const size_t frames = data_len / (3 * channels);
    for (auto& ch : out.channels) ch.resize(frames);
    for (size_t i = 0; i < frames; ++i)
      for (int c = 0; c < channels; ++c) {
        const uint8_t* p = data + 3 * (i * channels + c);
        int32_t v = int32_t(p[0]) | int32_t(p[1]) << 8 | int32_t(p[2]) << 16;
        if (v & 0x800000) v |= ~0xFFFFFF;  // sign extend
        out.channels[c][i] = v / 8388608.0;
      }
  } else if (format == 3 && bits == 32) {
    out.bit_depth = 32;
    out.is_float = true;
    const size_t frames = data_len / (4 * channels);
    for (auto& ch : out.channels) ch.resize(frames);
    for (size_t i = 0; i < frames; ++i)
      for (int c = 0; c < channels; ++c) {
        float v;
        std::memcpy(&v, data + 4 * (i * channels + c), 4);
        out.channels[c][i] = v;
      }
  } else {
    throw std::runtime_error("wav: unsupported format (only 16/24-bit PCM and "
                             "32-bit float): " + path);
  }
  return out;
}

void write_wav(const std::string& path, const WavData& data) {
  if (data.channels.empty()) throw std::invalid_argument("wav: no channels");
  const size_t frames = data.num_frames();
  for (const auto& ch : data.channels)
    if (ch.size() != frames) throw std::invalid_argument("wav: ragged channels");

  const int channels = static_cast<int>(data.num_channels());
  int bytes_per_sample;
  uint16_t format;
  if (data.is_float || data.bit_depth == 32) {
    bytes_per_sample = 4;
    format = 3;
  } else if (data.bit_depth == 16) {
    bytes_per_sample = 2;
    format = 1;
  } else if (data.bit_depth == 24) {
    bytes_per_sample = 3;
    format = 1;
  } else {
    throw std::invalid_argument("wav: unsupported bit depth");
  }

  const uint32_t data_size =
      static_cast<uint32_t>(frames * channels * bytes_per_sample);
  std::vector<uint8_t> buf;
  buf.reserve(44 + data_size);
  wr_tag(buf, "RIFF");
  wr_u32(buf, 36 + data_size);
  wr_tag(buf, "WAVE");
  wr_tag(buf, "fmt ");
  wr_u32(buf, 16);
  wr_u16(buf, format);
  wr_u16(buf, static_cast<uint16_t>(channels));
  wr_u32(buf, static_cast<uint32_t>(std::llround(data.sample_rate)));
  wr_u32(buf, static_cast<uint32_t>(std::llround(data.sample_rate)) * channels *
                  bytes_per_sample);
  wr_u16(buf, static_cast<uint16_t>(channels * bytes_per_sample));
  wr_u16(buf, static_cast<uint16_t>(bytes_per_sample * 8));
  wr_tag(buf, "data");
  wr_u32(buf, data_size);

  for (size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      const double v = data.channels[c][i];
      if (format == 3) {
        const float fv = static_cast<float>(v);
        const uint8_t* p = reinterpret_cast<const uint8_t*>(&fv);
        buf.insert(buf.end(), p, p + 4);
      } else if (bytes_per_sample == 2) {
        const double scaled = std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0;
        const int16_t iv = static_cast<int16_t>(std::lrint(scaled));
        wr_u16(buf, static_cast<uint16_t>(iv));
      } else {
        const double scaled =
            std::clamp(v, -1.0, 8388607.0 / 8388608.0) * 8388608.0;
        const int32_t iv = static_cast<int32_t>(std::lrint(scaled));
        buf.push_back(iv & 0xff);
        buf.push_back((iv >> 8) & 0xff);
        buf.push_back((iv >> 16) & 0xff);
      }
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav: cannot write " + path);
  f.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  if (!f) throw std::runtime_error("wav: write failed: " + path);
}

}  // namespace cdr
