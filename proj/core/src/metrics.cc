#include "gammase/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gammase/common.h"

namespace gammase {

namespace {

constexpr double kDbClamp = 100.0;
constexpr double kActiveGateDb = 40.0;

double ClampDb(double ratio, double lo, double hi) {
  if (ratio <= 0.0) return lo;
  return std::clamp(10.0 * std::log10(ratio), lo, hi);
}

Eigen::VectorXd FramePowers(const Eigen::VectorXd& signal,
                            const FrameConfig& frame) {
  frame.Validate();
  const Eigen::Index L = frame.frame_len;
  GS_CHECK_INPUT(signal.size() >= L, "signal shorter than one frame");
  const Eigen::Index T = (signal.size() - L) / frame.hop + 1;
  Eigen::VectorXd powers(T);
  for (Eigen::Index t = 0; t < T; ++t)
    powers[t] = signal.segment(t * frame.hop, L).squaredNorm() /
                static_cast<double>(L);
  return powers;
}

}  // namespace

double Sdr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  GS_CHECK_INPUT(estimate.size() == reference.size(),
                 "estimate/reference length mismatch");
  double ref_energy = reference.squaredNorm();
  GS_CHECK_INPUT(ref_energy > 0.0, "reference signal is silent");
  double scale = estimate.dot(reference) / ref_energy;
  Eigen::VectorXd target = scale * reference;
  double distortion = (estimate - target).squaredNorm();
  double target_energy = target.squaredNorm();
  if (distortion <= 0.0) return kDbClamp;
  return ClampDb(target_energy / distortion, -kDbClamp, kDbClamp);
}

double LongTermSnr(const Eigen::VectorXd& signal,
                   const Eigen::VectorXd& noise) {
  double num = signal.squaredNorm();
  double den = noise.squaredNorm();
  GS_CHECK_INPUT(num > 0.0 && den > 0.0, "silent input to snr");
  return ClampDb(num / den, -kDbClamp, kDbClamp);
}

double SegSnr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
              const FrameConfig& frame) {
  GS_CHECK_INPUT(estimate.size() == reference.size(),
                 "estimate/reference length mismatch");
  frame.Validate();
  const Eigen::Index L = frame.frame_len;
  GS_CHECK_INPUT(reference.size() >= L, "signal shorter than one frame");
  const Eigen::Index T = (reference.size() - L) / frame.hop + 1;
  double acc = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    auto ref = reference.segment(t * frame.hop, L);
    auto est = estimate.segment(t * frame.hop, L);
    double ref_energy = ref.squaredNorm();
    if (ref_energy <= 0.0) continue;
    double err_energy = (est - ref).squaredNorm();
    double db = (err_energy <= 0.0)
                    ? 30.0
                    : std::clamp(10.0 * std::log10(ref_energy / err_energy),
                                 -10.0, 30.0);
    acc += db;
    ++used;
  }
  GS_CHECK_INPUT(used > 0, "no active reference frames");
  return acc / static_cast<double>(used);
}

double SpectralDistortionFromPower(const Eigen::MatrixXd& estimate_power,
                                   const Eigen::MatrixXd& reference_power) {
  GS_CHECK_INPUT(estimate_power.rows() == reference_power.rows() &&
                     estimate_power.cols() == reference_power.cols(),
                 "power matrix shape mismatch");
  Eigen::MatrixXd est = FloorPeriodogram(estimate_power);
  Eigen::MatrixXd ref = FloorPeriodogram(reference_power);
  Eigen::VectorXd frame_power = reference_power.colwise().sum();
  double gate = frame_power.maxCoeff() * std::pow(10.0, -kActiveGateDb / 10.0);
  double acc = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index t = 0; t < ref.cols(); ++t) {
    if (frame_power[t] < gate) continue;
    Eigen::ArrayXd diff =
        10.0 * (ref.col(t).array().log10() - est.col(t).array().log10());
    acc += std::sqrt(diff.square().mean());
    ++used;
  }
  GS_CHECK_INPUT(used > 0, "no active reference frames");
  return acc / static_cast<double>(used);
}

double SpectralDistortion(const Eigen::VectorXd& estimate,
                          const Eigen::VectorXd& reference,
                          const FrameConfig& frame) {
  GS_CHECK_INPUT(estimate.size() == reference.size(),
                 "estimate/reference length mismatch");
  Eigen::MatrixXd est_power = Periodogram(Stft(estimate, frame));
  Eigen::MatrixXd ref_power = Periodogram(Stft(reference, frame));
  return SpectralDistortionFromPower(est_power, ref_power);
}

double ActiveLevel(const Eigen::VectorXd& signal, const FrameConfig& frame) {
  Eigen::VectorXd powers = FramePowers(signal, frame);
  double max_power = powers.maxCoeff();
  if (max_power <= 0.0) return 0.0;
  double gate = max_power * std::pow(10.0, -kActiveGateDb / 10.0);
  double acc = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index t = 0; t < powers.size(); ++t) {
    if (powers[t] < gate) continue;
    acc += powers[t];
    ++used;
  }
  return acc / static_cast<double>(used);
}

ShadowFilterResult ShadowFilterEval(const Eigen::MatrixXd& gains,
                                    const Eigen::VectorXd& clean,
                                    const Eigen::VectorXd& noise,
                                    const FrameConfig& frame) {
  GS_CHECK_INPUT(clean.size() == noise.size(),
                 "clean/noise length mismatch");
  Spectrogram clean_spec = Stft(clean, frame);
  Spectrogram noise_spec = Stft(noise, frame);
  GS_CHECK_INPUT(gains.rows() == clean_spec.num_bins() &&
                     gains.cols() == clean_spec.num_frames(),
                 "gain trajectory does not match the spectrogram");
  Eigen::MatrixXcd gain_c = gains.cast<std::complex<double>>();
  Spectrogram filtered_clean{clean_spec.frames.cwiseProduct(gain_c),
                             frame};
  Spectrogram filtered_noise{noise_spec.frames.cwiseProduct(gain_c),
                             frame};
  Eigen::VectorXd yc = Istft(filtered_clean);
  Eigen::VectorXd yn = Istft(filtered_noise);

  const Eigen::Index interior_len = yc.size() - 2 * frame.hop;
  GS_CHECK_INPUT(interior_len >= frame.frame_len,
                 "signal too short for interior evaluation");
  Eigen::VectorXd clean_i = clean.segment(frame.hop, interior_len);
  Eigen::VectorXd noise_i = noise.segment(frame.hop, interior_len);
  Eigen::VectorXd yc_i = yc.segment(frame.hop, interior_len);
  Eigen::VectorXd yn_i = yn.segment(frame.hop, interior_len);

  ShadowFilterResult result;
  result.speech_distortion = SpectralDistortion(yc_i, clean_i, frame);

  const Eigen::Index L = frame.frame_len;
  const Eigen::Index T = (interior_len - L) / frame.hop + 1;
  double acc = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    double before = noise_i.segment(t * frame.hop, L).squaredNorm();
    double after = yn_i.segment(t * frame.hop, L).squaredNorm();
    if (before <= 0.0) continue;
    double db = (after <= 0.0)
                    ? 40.0
                    : std::clamp(10.0 * std::log10(before / after), 0.0, 40.0);
    acc += db;
    ++used;
  }
  GS_CHECK_INPUT(used > 0, "no active noise frames");
  result.noise_reduction = acc / static_cast<double>(used);
  return result;
}

Eigen::VectorXd ReconstructFromPower(const Spectrogram& reference,
                                     const Eigen::MatrixXd& power) {
  GS_CHECK_INPUT(power.rows() == reference.num_bins() &&
                     power.cols() == reference.num_frames(),
                 "power envelope does not match the spectrogram");
  GS_CHECK_INPUT(power.minCoeff() >= 0.0, "negative power envelope");
  Spectrogram rebuilt;
  rebuilt.config = reference.config;
  rebuilt.frames.resize(reference.num_bins(), reference.num_frames());
  for (Eigen::Index t = 0; t < power.cols(); ++t) {
    for (Eigen::Index k = 0; k < power.rows(); ++k) {
      std::complex<double> y = reference.frames(k, t);
      double mag = std::sqrt(power(k, t));
      double abs_y = std::abs(y);
      rebuilt.frames(k, t) =
          (abs_y > 0.0) ? y * (mag / abs_y) : std::complex<double>(mag, 0.0);
    }
  }
  return Istft(rebuilt);
}

bool CrossPredictResult::RowDiagonalDominant() const {
  return speech_under_speech.sd < speech_under_babble.sd &&
         speech_under_speech.segsnr > speech_under_babble.segsnr &&
         babble_under_babble.sd < babble_under_speech.sd &&
         babble_under_babble.segsnr > babble_under_speech.segsnr;
}

CrossPredictResult CrossPredict(
    const SpeechHmm& speech, const BabbleNhmm& babble,
    const std::vector<Eigen::VectorXd>& speech_signals,
    const std::vector<Eigen::VectorXd>& babble_signals,
    const FrameConfig& frame) {
  GS_CHECK_INPUT(!speech_signals.empty() && !babble_signals.empty(),
                 "cross prediction needs data of both kinds");
  auto score = [&](const std::vector<Eigen::VectorXd>& signals,
                   bool use_speech) -> CrossPredictCell {
    CrossPredictCell cell;
    for (const auto& signal : signals) {
      Spectrogram spec = Stft(signal, frame);
      Eigen::MatrixXd power = FloorPeriodogram(Periodogram(spec));
      NmfProjection proj;
      if (use_speech) {
        double theta = MomentMatchGainScale(speech, power);
        proj = NmfProject(speech, theta, power);
      } else {
        double gamma = BabbleMomentMatchGainScale(babble, power);
        proj = BabbleNmfProject(babble, gamma, power);
      }
      Eigen::VectorXd recon = ReconstructFromPower(spec, proj.approx);
      const Eigen::Index interior = recon.size() - 2 * frame.hop;
      GS_CHECK_INPUT(interior >= frame.frame_len,
                     "signal too short for interior evaluation");
      Eigen::VectorXd ref_i = signal.segment(frame.hop, interior);
      Eigen::VectorXd rec_i = recon.segment(frame.hop, interior);
      cell.sd += SpectralDistortion(rec_i, ref_i, frame);
      cell.segsnr += SegSnr(rec_i, ref_i, frame);
    }
    cell.sd /= static_cast<double>(signals.size());
    cell.segsnr /= static_cast<double>(signals.size());
    return cell;
  };
  CrossPredictResult result;
  result.speech_under_speech = score(speech_signals, true);
  result.speech_under_babble = score(speech_signals, false);
  result.babble_under_speech = score(babble_signals, true);
  result.babble_under_babble = score(babble_signals, false);
  return result;
}

void WriteEvalCsv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  GS_CHECK_INPUT(out.good(), "cannot write ", path);
  out << "# gammase-eval-v1\n";
  out << "name,snr_db,sdr_noisy,sdr_enhanced,snr_noisy,snr_enhanced,"
         "segsnr_noisy,segsnr_enhanced,sd_noisy,sd_enhanced,"
         "delta_sdr,delta_snr,delta_segsnr,delta_sd\n";
  char line[640];
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof(line),
                  "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,"
                  "%.6f,%.6f,%.6f,%.6f\n",
                  row.name.c_str(), row.snr_db, row.sdr_noisy,
                  row.sdr_enhanced, row.snr_noisy, row.snr_enhanced,
                  row.segsnr_noisy, row.segsnr_enhanced, row.sd_noisy,
                  row.sd_enhanced, row.sdr_enhanced - row.sdr_noisy,
                  row.snr_enhanced - row.snr_noisy,
                  row.segsnr_enhanced - row.segsnr_noisy,
                  row.sd_enhanced - row.sd_noisy);
    out << line;
  }
  GS_CHECK_INPUT(out.good(), "failed while writing ", path);
}

std::string FormatEvalTable(const EvalReport& report) {
  std::ostringstream out;
  char line[640];
  std::snprintf(line, sizeof(line), "%-24s %6s %15s %15s %15s %13s %7s %7s\n",
                "name", "snr", "sdr in/out", "snr in/out", "segsnr in/out",
                "sd in/out", "dSDR", "dSeg");
  out << line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof(line),
                  "%-24s %6.1f %7.2f/%7.2f %7.2f/%7.2f %7.2f/%7.2f "
                  "%6.2f/%6.2f %7.2f %7.2f\n",
                  row.name.c_str(), row.snr_db, row.sdr_noisy,
                  row.sdr_enhanced, row.snr_noisy, row.snr_enhanced,
                  row.segsnr_noisy, row.segsnr_enhanced, row.sd_noisy,
                  row.sd_enhanced, row.sdr_enhanced - row.sdr_noisy,
                  row.segsnr_enhanced - row.segsnr_noisy);
    out << line;
  }
  return out.str();
}

}  // namespace gammase
