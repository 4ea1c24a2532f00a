#include "gammase/wav.h"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "gammase/common.h"

namespace gammase {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (p[1] << 8) | (p[2] << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::vector<unsigned char>* out, std::uint32_t v) {
  out->push_back(v & 0xff);
  out->push_back((v >> 8) & 0xff);
  out->push_back((v >> 16) & 0xff);
  out->push_back((v >> 24) & 0xff);
}
void PutU16(std::vector<unsigned char>* out, std::uint16_t v) {
  out->push_back(v & 0xff);
  out->push_back((v >> 8) & 0xff);
}

}  // namespace

WavData ReadWav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  GS_CHECK_INPUT(f.good(), "cannot open \"", path, "\"");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  GS_CHECK_INPUT(bytes.size() >= 44, "\"", path, "\" is too small to be a WAV file");
  GS_CHECK_INPUT(std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
                     std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
                 "\"", path, "\" is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    std::uint32_t chunk_len = ReadU32(bytes.data() + pos + 4);
    const unsigned char* chunk = bytes.data() + pos + 8;
    std::size_t avail = bytes.size() - pos - 8;
    std::size_t len = std::min<std::size_t>(chunk_len, avail);
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      GS_CHECK_INPUT(len >= 16, "malformed fmt chunk in \"", path, "\"");
      format = ReadU16(chunk);
      channels = ReadU16(chunk + 2);
      rate = ReadU32(chunk + 4);
      bits = ReadU16(chunk + 14);
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data = chunk;
      data_len = len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  GS_CHECK_INPUT(have_fmt && data != nullptr, "\"", path,
                 "\" lacks fmt or data chunk");
  GS_CHECK_INPUT(channels == 1, "\"", path, "\" has ", channels,
                 " channels; only mono input is supported");

  WavData wav;
  wav.sample_rate = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    std::size_t n = data_len / 2;
    wav.samples.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      std::int16_t s =
          static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
      wav.samples[static_cast<Eigen::Index>(i)] = s / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    std::size_t n = data_len / 4;
    wav.samples.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = ReadU32(data + 4 * i);
      float v;
      std::memcpy(&v, &u, 4);
      wav.samples[static_cast<Eigen::Index>(i)] = v;
    }
  } else {
    GS_CHECK_INPUT(false, "\"", path, "\": unsupported encoding (format=",
                   format, ", bits=", bits,
                   "); expected 16-bit PCM or 32-bit float");
  }
  GS_CHECK_INPUT(wav.samples.allFinite(), "\"", path,
                 "\" contains non-finite samples");
  return wav;
}

void WriteWav(const std::string& path, const Eigen::VectorXd& samples,
              int sample_rate, WavFormat format) {
  GS_CHECK_INPUT(sample_rate > 0, "sample rate must be positive");
  GS_CHECK_INPUT(samples.allFinite(), "refusing to write non-finite samples");

  int bytes_per = format == WavFormat::kPcm16 ? 2 : 4;
  std::uint16_t code = format == WavFormat::kPcm16 ? kFormatPcm : kFormatFloat;
  std::uint32_t data_len =
      static_cast<std::uint32_t>(samples.size()) * bytes_per;

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  PutU32(&out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutU32(&out, 16);
  PutU16(&out, code);
  PutU16(&out, 1);  // mono
  PutU32(&out, static_cast<std::uint32_t>(sample_rate));
  PutU32(&out, static_cast<std::uint32_t>(sample_rate) * bytes_per);
  PutU16(&out, static_cast<std::uint16_t>(bytes_per));
  PutU16(&out, static_cast<std::uint16_t>(8 * bytes_per));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutU32(&out, data_len);

  if (format == WavFormat::kPcm16) {
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
      double v = std::clamp(samples[i], -1.0, 32767.0 / 32768.0);
      auto s = static_cast<std::int16_t>(std::lrint(v * 32768.0));
      PutU16(&out, static_cast<std::uint16_t>(s));
    }
  } else {
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
      auto v = static_cast<float>(samples[i]);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      PutU32(&out, u);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  GS_CHECK_INPUT(f.good(), "cannot open \"", path, "\" for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  GS_CHECK_INPUT(f.good(), "failed writing \"", path, "\"");
}

}  // namespace gammase
