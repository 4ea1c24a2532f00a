#ifndef GAMMASE_WAV_H_
#define GAMMASE_WAV_H_

#include <Eigen/Dense>
#include <string>

namespace gammase {

struct WavData {
  Eigen::VectorXd samples;  // mono, nominal range [-1, 1]
  int sample_rate = 0;
};

// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit float data.
// Anything else (multi-channel, other encodings, malformed chunks) is an
// InputError; this library never resamples or downmixes.
WavData ReadWav(const std::string& path);

enum class WavFormat { kPcm16, kFloat32 };

// Writes a mono WAV file.  kPcm16 clips to [-1, 1) before quantizing;
// kFloat32 stores samples bit-exactly, which keeps pipeline output
// reproducible byte for byte.
void WriteWav(const std::string& path, const Eigen::VectorXd& samples,
              int sample_rate, WavFormat format = WavFormat::kFloat32);

}  // namespace gammase

#endif  // GAMMASE_WAV_H_
