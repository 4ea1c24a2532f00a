#include "gammase/dsp.h"

#include <cmath>
#include <cstdio>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <random>

#include "gammase/common.h"
#include "gammase/wav.h"

namespace {

using gammase::FloorPeriodogram;
using gammase::FrameConfig;
using gammase::HannWindow;
using gammase::InputError;
using gammase::Istft;
using gammase::Periodogram;
using gammase::ReadWav;
using gammase::Spectrogram;
using gammase::Stft;
using gammase::WavFormat;
using gammase::WriteWav;

std::filesystem::path TempFile(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

Eigen::VectorXd RandomSignal(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.9, 0.9);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = dist(rng);
  return x;
}

TEST_CASE("frame config validation") {
  FrameConfig good;
  good.Validate();
  CHECK(good.num_bins() == 161);

  FrameConfig odd = good;
  odd.frame_len = 321;
  CHECK_THROWS_AS(odd.Validate(), InputError);

  FrameConfig bad_hop = good;
  bad_hop.hop = 100;
  CHECK_THROWS_AS(bad_hop.Validate(), InputError);

  FrameConfig bad_rate = good;
  bad_rate.sample_rate = 0;
  CHECK_THROWS_AS(bad_rate.Validate(), InputError);

  FrameConfig bad_window = good;
  bad_window.window = "hamming";
  CHECK_THROWS_AS(bad_window.Validate(), InputError);
}

TEST_CASE("periodic hann window") {
  Eigen::VectorXd w4 = HannWindow(4);
  CHECK(w4[0] == 0.0);
  CHECK(w4[1] == doctest::Approx(0.5));
  CHECK(w4[2] == doctest::Approx(1.0));
  CHECK(w4[3] == doctest::Approx(0.5));

  // Half-overlapped copies tile to a constant, which is what makes the
  // plain overlap-add resynthesis exact away from the edges.
  Eigen::VectorXd w = HannWindow(320);
  for (int i = 0; i < 160; ++i)
    CHECK(std::fabs(w[i] + w[i + 160] - 1.0) < 1e-14);
}

TEST_CASE("stft frame count and input checks") {
  FrameConfig frame;
  CHECK(Stft(RandomSignal(320, 1), frame).num_frames() == 1);
  CHECK(Stft(RandomSignal(479, 2), frame).num_frames() == 1);
  CHECK(Stft(RandomSignal(480, 3), frame).num_frames() == 2);
  CHECK(Stft(RandomSignal(3200, 4), frame).num_frames() == 19);
  CHECK_THROWS_AS(Stft(RandomSignal(319, 5), frame), InputError);
  Eigen::VectorXd nan_sig = RandomSignal(500, 6);
  nan_sig[100] = std::nan("");
  CHECK_THROWS_AS(Stft(nan_sig, frame), InputError);
}

TEST_CASE("pure tone lands in the expected bins") {
  FrameConfig frame;
  const int n = frame.frame_len;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = std::cos(2.0 * M_PI * 10.0 * i / n);
  Eigen::MatrixXd p = Periodogram(Stft(x, frame));
  REQUIRE(p.cols() == 1);
  // Windowed DFT of an on-grid cosine: the Hann kernel contributes
  // n/2 at the tone bin and -n/4 at the two neighbours.
  CHECK(std::fabs(p(10, 0) - 6400.0) < 1e-8);
  CHECK(std::fabs(p(9, 0) - 1600.0) < 1e-8);
  CHECK(std::fabs(p(11, 0) - 1600.0) < 1e-8);
  for (int k = 0; k < frame.num_bins(); ++k) {
    if (k >= 9 && k <= 11) continue;
    CHECK(p(k, 0) < 1e-18);
  }
}

TEST_CASE("stft is linear") {
  FrameConfig frame;
  Eigen::VectorXd a = RandomSignal(1600, 7);
  Eigen::VectorXd b = RandomSignal(1600, 8);
  Spectrogram sa = Stft(a, frame);
  Spectrogram sb = Stft(b, frame);
  Spectrogram sum = Stft(a + b, frame);
  CHECK((sum.frames - sa.frames - sb.frames).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("windowed frame energy survives the transform") {
  FrameConfig frame;
  const int n = frame.frame_len;
  Eigen::VectorXd x = RandomSignal(n, 9);
  Eigen::VectorXd w = HannWindow(n);
  double time_energy = (x.array() * w.array()).square().sum();
  Eigen::MatrixXd p = Periodogram(Stft(x, frame));
  double freq_energy = p(0, 0) + p(n / 2, 0);
  for (int k = 1; k < n / 2; ++k) freq_energy += 2.0 * p(k, 0);
  freq_energy /= n;
  CHECK(std::fabs(freq_energy - time_energy) < 1e-10 * time_energy);
}

TEST_CASE("istft reconstructs the interior exactly") {
  FrameConfig frame;
  Eigen::VectorXd x = RandomSignal(4800, 10);
  Eigen::VectorXd y = Istft(Stft(x, frame));
  REQUIRE(y.size() == x.size());
  for (Eigen::Index i = frame.hop; i < x.size() - frame.hop; ++i)
    CHECK(std::fabs(y[i] - x[i]) < 1e-12);
}

TEST_CASE("periodogram flooring") {
  Eigen::MatrixXd p(3, 2);
  p << 1.0, 0.0, 2.0, 0.0, 3.0, 0.0;
  Eigen::MatrixXd f = FloorPeriodogram(p);
  // Positive entries pass through; the floor scales with the frame mean.
  CHECK(f(0, 0) == 1.0);
  CHECK(f(1, 0) == 2.0);
  CHECK(f(2, 0) == 3.0);
  CHECK(f.col(1).minCoeff() == 1e-300);  // an all-zero frame

  Eigen::MatrixXd mixed(2, 1);
  mixed << 4.0, 0.0;
  Eigen::MatrixXd fm = FloorPeriodogram(mixed);
  CHECK(fm(0, 0) == 4.0);
  CHECK(fm(1, 0) == doctest::Approx(2e-12).epsilon(1e-9));
  CHECK(fm.minCoeff() > 0.0);
}

TEST_CASE("float wav files round trip bit-exactly") {
  auto path = TempFile("gammase_test_f32.wav");
  Eigen::VectorXd x = RandomSignal(1234, 11);
  WriteWav(path.string(), x, 16000, WavFormat::kFloat32);
  auto wav = ReadWav(path.string());
  CHECK(wav.sample_rate == 16000);
  REQUIRE(wav.samples.size() == x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    CHECK(wav.samples[i] == static_cast<double>(static_cast<float>(x[i])));
  std::filesystem::remove(path);
}

TEST_CASE("pcm16 wav files round trip on the quantization grid") {
  auto path = TempFile("gammase_test_p16.wav");
  Eigen::VectorXd x(5);
  x << 0.0, 0.5, -0.25, 12345.0 / 32768.0, -1.0;
  WriteWav(path.string(), x, 8000, WavFormat::kPcm16);
  auto wav = ReadWav(path.string());
  CHECK(wav.sample_rate == 8000);
  REQUIRE(wav.samples.size() == 5);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(wav.samples[i] == x[i]);
  std::filesystem::remove(path);
}

TEST_CASE("pcm16 writer clamps out-of-range samples") {
  auto path = TempFile("gammase_test_clamp.wav");
  Eigen::VectorXd x(2);
  x << 1.5, -2.0;
  WriteWav(path.string(), x, 8000, WavFormat::kPcm16);
  auto wav = ReadWav(path.string());
  CHECK(wav.samples[0] == 32767.0 / 32768.0);
  CHECK(wav.samples[1] == -1.0);
  std::filesystem::remove(path);
}

TEST_CASE("wav reader rejects junk") {
  CHECK_THROWS_AS(ReadWav("/nonexistent/definitely_missing.wav"), InputError);
  auto path = TempFile("gammase_test_junk.wav");
  {
    std::ofstream f(path, std::ios::binary);
    f << "this is not audio and clearly has more than forty four bytes in it";
  }
  CHECK_THROWS_AS(ReadWav(path.string()), InputError);
  std::filesystem::remove(path);
}

TEST_CASE("wav writer refuses non-finite samples") {
  Eigen::VectorXd x(3);
  x << 0.0, std::nan(""), 0.5;
  CHECK_THROWS_AS(WriteWav(TempFile("gammase_never.wav").string(), x, 16000,
                           WavFormat::kFloat32),
                  InputError);
}

}  // namespace
