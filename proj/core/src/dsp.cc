#include "gammase/dsp.h"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "gammase/common.h"

namespace gammase {
namespace {

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& FftwMutex() {
  static std::mutex mu;
  return mu;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(FftwMutex());
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    // FFTW_ESTIMATE keeps plan selection deterministic run to run.
    fwd_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, out_, in_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(FftwMutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void Forward(const double* frame, std::complex<double>* bins) {
    for (int i = 0; i < n_; ++i) in_[i] = frame[i];
    fftw_execute(fwd_);
    for (int k = 0; k <= n_ / 2; ++k)
      bins[k] = std::complex<double>(out_[k][0], out_[k][1]);
  }

  // Unnormalized c2r; caller divides by n.  Destroys the bin buffer
  // contents (FFTW c2r writes over its input).
  void Inverse(const std::complex<double>* bins, double* frame) {
    for (int k = 0; k <= n_ / 2; ++k) {
      out_[k][0] = bins[k].real();
      out_[k][1] = bins[k].imag();
    }
    fftw_execute(inv_);
    for (int i = 0; i < n_; ++i) frame[i] = in_[i];
  }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan fwd_, inv_;
};

}  // namespace

void FrameConfig::Validate() const {
  GS_CHECK_INPUT(frame_len > 0 && frame_len % 2 == 0,
                 "frame_len must be positive and even, got ", frame_len);
  GS_CHECK_INPUT(hop == frame_len / 2,
                 "hop must equal frame_len/2 for reconstruction, got hop=",
                 hop, " frame_len=", frame_len);
  GS_CHECK_INPUT(sample_rate > 0, "sample_rate must be positive, got ",
                 sample_rate);
  GS_CHECK_INPUT(window == "hann", "unsupported window \"", window, "\"");
}

Eigen::VectorXd HannWindow(int n) {
  GS_CHECK_INPUT(n > 0, "window length must be positive");
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}

Spectrogram Stft(const Eigen::VectorXd& signal, const FrameConfig& config) {
  config.Validate();
  GS_CHECK_INPUT(signal.size() >= config.frame_len,
                 "signal too short for one frame: ", signal.size(), " < ",
                 config.frame_len);
  GS_CHECK_INPUT(signal.allFinite(), "signal contains non-finite samples");

  int L = config.frame_len;
  int T = static_cast<int>((signal.size() - L) / config.hop) + 1;
  int K = config.num_bins();
  Eigen::VectorXd window = HannWindow(L);
  Spectrogram spec;
  spec.config = config;
  spec.frames.resize(K, T);

  RealFft fft(L);
  Eigen::VectorXd frame(L);
  for (int t = 0; t < T; ++t) {
    frame = signal.segment(static_cast<Eigen::Index>(t) * config.hop, L)
                .cwiseProduct(window);
    fft.Forward(frame.data(), spec.frames.col(t).data());
  }
  return spec;
}

Eigen::VectorXd Istft(const Spectrogram& spec) {
  spec.config.Validate();
  GS_CHECK_INPUT(spec.frames.rows() == spec.config.num_bins(),
                 "spectrogram has ", spec.frames.rows(), " rows, expected ",
                 spec.config.num_bins());
  GS_CHECK_INPUT(spec.num_frames() > 0, "empty spectrogram");

  int L = spec.config.frame_len;
  int T = spec.num_frames();
  Eigen::VectorXd out =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(T - 1) * spec.config.hop + L);

  RealFft fft(L);
  Eigen::VectorXd frame(L);
  Eigen::VectorXcd bins(spec.config.num_bins());
  for (int t = 0; t < T; ++t) {
    bins = spec.frames.col(t);
    fft.Inverse(bins.data(), frame.data());
    out.segment(static_cast<Eigen::Index>(t) * spec.config.hop, L) +=
        frame / static_cast<double>(L);
  }
  return out;
}

Eigen::MatrixXd Periodogram(const Spectrogram& spec) {
  return spec.frames.cwiseAbs2();
}

Eigen::MatrixXd FloorPeriodogram(const Eigen::MatrixXd& power) {
  Eigen::MatrixXd floored = power;
  for (Eigen::Index t = 0; t < power.cols(); ++t) {
    double floor_t = 1e-12 * power.col(t).mean();
    if (!(floor_t > 0.0)) floor_t = 1e-300;
    floored.col(t) = floored.col(t).cwiseMax(floor_t);
  }
  return floored;
}

void CheckSampleRate(const FrameConfig& config, int wav_rate,
                     const std::string& origin) {
  if (wav_rate != config.sample_rate)
    Warn(internal::StrCat(origin, ": sample rate ", wav_rate,
                          " Hz differs from configured ", config.sample_rate,
                          " Hz; processing without resampling"));
}

}  // namespace gammase
