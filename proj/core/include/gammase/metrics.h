#ifndef GAMMASE_METRICS_H_
#define GAMMASE_METRICS_H_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gammase/babble_nhmm.h"
#include "gammase/dsp.h"
#include "gammase/speech_hmm.h"

namespace gammase {

// Signal-to-distortion ratio in dB against the orthogonal projection of
// the estimate onto the reference.  Clamped to [-100, 100].
double Sdr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference);

// Long-term energy ratio in dB, clamped to [-100, 100].
double LongTermSnr(const Eigen::VectorXd& signal, const Eigen::VectorXd& noise);

// Mean per-frame SNR in dB with frames on the analysis hop grid; each
// frame is clamped to [-10, 30] and zero-reference frames are skipped.
double SegSnr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
              const FrameConfig& frame);

// Mean over active frames of the RMS log-spectral difference in dB.
// Frames more than 40 dB below the loudest reference frame are ignored.
double SpectralDistortion(const Eigen::VectorXd& estimate,
                          const Eigen::VectorXd& reference,
                          const FrameConfig& frame);
double SpectralDistortionFromPower(const Eigen::MatrixXd& estimate_power,
                                   const Eigen::MatrixXd& reference_power);

// Mean power of the frames within 40 dB of the loudest frame.
double ActiveLevel(const Eigen::VectorXd& signal, const FrameConfig& frame);

// Applies a spectral gain trajectory separately to the clean and noise
// components and reports what the filter did to each: log-spectral
// distortion of the speech and segmental noise reduction (per-frame
// clamp [0, 40] dB), both over the interior of the resynthesis.
struct ShadowFilterResult {
  double speech_distortion = 0.0;
  double noise_reduction = 0.0;
};
ShadowFilterResult ShadowFilterEval(const Eigen::MatrixXd& gains,
                                    const Eigen::VectorXd& clean,
                                    const Eigen::VectorXd& noise,
                                    const FrameConfig& frame);

// Rebuilds a waveform from an expected power envelope, keeping the
// phases of the reference spectrogram.
Eigen::VectorXd ReconstructFromPower(const Spectrogram& reference,
                                     const Eigen::MatrixXd& power);

// Projects held-out signals through each model's factorized spectral
// representation, resynthesizes with the input phase, and scores the
// reconstruction against the input.  Row-diagonal dominance of both
// scores indicates that each model fits its own material best.
struct CrossPredictCell {
  double sd = 0.0;
  double segsnr = 0.0;
};
struct CrossPredictResult {
  CrossPredictCell speech_under_speech;
  CrossPredictCell speech_under_babble;
  CrossPredictCell babble_under_speech;
  CrossPredictCell babble_under_babble;
  bool RowDiagonalDominant() const;
};
CrossPredictResult CrossPredict(
    const SpeechHmm& speech, const BabbleNhmm& babble,
    const std::vector<Eigen::VectorXd>& speech_signals,
    const std::vector<Eigen::VectorXd>& babble_signals,
    const FrameConfig& frame);

struct EvalRow {
  std::string name;
  double snr_db = 0.0;
  double sdr_noisy = 0.0;
  double sdr_enhanced = 0.0;
  double snr_noisy = 0.0;
  double snr_enhanced = 0.0;
  double segsnr_noisy = 0.0;
  double segsnr_enhanced = 0.0;
  double sd_noisy = 0.0;
  double sd_enhanced = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

void WriteEvalCsv(const EvalReport& report, const std::string& path);
std::string FormatEvalTable(const EvalReport& report);

}  // namespace gammase

#endif  // GAMMASE_METRICS_H_
