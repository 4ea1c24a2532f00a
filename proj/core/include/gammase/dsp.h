// Short-time analysis/synthesis.  Fixed half-overlap framing with a
// periodic Hann window, so plain overlap-add reconstructs the interior
// of the signal exactly (window sums to one there).

#ifndef GAMMASE_DSP_H_
#define GAMMASE_DSP_H_

#include <Eigen/Dense>
#include <string>

namespace gammase {

struct FrameConfig {
  int frame_len = 320;   // samples per frame (20 ms at 16 kHz)
  int hop = 160;         // half overlap; required for reconstruction
  int sample_rate = 16000;
  std::string window = "hann";  // periodic Hann

  int num_bins() const { return frame_len / 2 + 1; }
  // Throws InputError unless frame_len is even and positive, hop is
  // exactly frame_len/2, sample_rate > 0, and the window is supported.
  void Validate() const;
};

struct Spectrogram {
  Eigen::MatrixXcd frames;  // num_bins x T, one-sided (DC..Nyquist)
  FrameConfig config;

  int num_bins() const { return static_cast<int>(frames.rows()); }
  int num_frames() const { return static_cast<int>(frames.cols()); }
};

// Periodic Hann window of length n.
Eigen::VectorXd HannWindow(int n);

// Frames, windows and transforms the signal.  Frames that would run past
// the end are dropped; T = floor((len - frame_len)/hop) + 1.  Throws
// InputError if the signal is shorter than one frame or contains
// non-finite samples.
Spectrogram Stft(const Eigen::VectorXd& signal, const FrameConfig& config);

// Inverse transform with overlap-add; output length (T-1)*hop + frame_len.
// Samples in [hop, len - hop) reproduce the corresponding input samples
// of a round trip; the half-frame edges are attenuated by the window.
Eigen::VectorXd Istft(const Spectrogram& spec);

// Squared magnitudes, same shape as the spectrogram.
Eigen::MatrixXd Periodogram(const Spectrogram& spec);

// Floors each column at 1e-12 times that frame's mean power so later
// log-likelihoods stay finite; an all-zero frame is floored at 1e-300.
Eigen::MatrixXd FloorPeriodogram(const Eigen::MatrixXd& power);

// Warns when recorded audio does not match the configured rate (no
// resampling is performed anywhere).
void CheckSampleRate(const FrameConfig& config, int wav_rate,
                     const std::string& origin);

}  // namespace gammase

#endif  // GAMMASE_DSP_H_
