#include "gammase/enhancer.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gammase/common.h"
#include "gammase/parallel.h"

namespace gammase {

namespace {

constexpr double kGainFloor = 1e-12;
constexpr double kScaleLo = 1e-12;
constexpr double kScaleHi = 1e12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double LogGammaPdf(double x, double shape, double scale) {
  return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) -
         std::lgamma(shape);
}

}  // namespace

CompositeModel CompositeModel::Build(const SpeechHmm& speech,
                                     const BabbleNhmm& babble,
                                     const EnhancerConfig& config) {
  speech.Validate();
  babble.Validate();
  GS_CHECK_INPUT(speech.num_bins() == babble.num_bins(),
                 "speech and babble models disagree on the number of bins");

  if ((speech.shape.array() - 1.0).abs().maxCoeff() > 1e-6)
    Warn("speech bin shapes differ from 1; folding them into the scales");
  if ((babble.shape.array() - 1.0).abs().maxCoeff() > 1e-6)
    Warn("babble bin shapes differ from 1; folding them into the scales");

  CompositeModel m;
  m.speech_scales =
      (speech.basis.array().colwise() * speech.shape.array()).matrix();
  Eigen::MatrixXd babble_base = babble.StateScales();
  m.babble_scales =
      (babble_base.array().colwise() * babble.shape.array()).matrix();
  m.speech_trans = speech.trans;
  m.babble_trans = babble.trans;
  m.speech_stationary = StationaryDistribution(speech.trans);
  m.babble_stationary = StationaryDistribution(babble.trans);
  m.speech_gain_shape = config.speech_gain_shape;
  m.babble_gain_shape = config.babble_gain_shape;
  GS_CHECK_NUMERIC(m.speech_scales.minCoeff() > 0.0 &&
                       m.babble_scales.minCoeff() > 0.0,
                   "composite state templates must be strictly positive");
  return m;
}

double LogJointGains(const Eigen::VectorXd& periodogram,
                     const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                     double phi, double theta, double psi, double gamma,
                     double g, double h) {
  Eigen::ArrayXd sigma2 = g * a.array() + h * c.array();
  if (!(sigma2.minCoeff() > 0.0) || g <= 0.0 || h <= 0.0) return -kInf;
  double loglik =
      (-sigma2.log() - periodogram.array() / sigma2).sum() -
      static_cast<double>(periodogram.size()) * std::log(M_PI);
  return loglik + LogGammaPdf(g, phi, theta) + LogGammaPdf(h, psi, gamma);
}

Eigen::Matrix2d GainNegativeHessian(const Eigen::VectorXd& periodogram,
                                    const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& c, double phi,
                                    double psi, const Eigen::VectorXd& sigma2,
                                    double g, double h) {
  Eigen::ArrayXd s2 = sigma2.array();
  Eigen::ArrayXd common = (1.0 - 2.0 * periodogram.array() / s2) / (s2 * s2);
  Eigen::Matrix2d neg_hess;
  neg_hess(0, 0) = (phi - 1.0) / (g * g) - (a.array().square() * common).sum();
  neg_hess(1, 1) = (psi - 1.0) / (h * h) - (c.array().square() * common).sum();
  neg_hess(0, 1) = -(a.array() * c.array() * common).sum();
  neg_hess(1, 0) = neg_hess(0, 1);
  return neg_hess;
}

MapGainsResult MapGains(const Eigen::VectorXd& periodogram,
                        const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                        double phi, double theta, double psi, double gamma,
                        double tol, int max_iters,
                        std::vector<std::pair<double, double>>* trace) {
  const double K = static_cast<double>(periodogram.size());
  const double A = theta * (K - phi + 1.0);
  const double B = gamma * (K - psi + 1.0);

  MapGainsResult result;
  auto run = [&](double g, double h) -> bool {
    if (trace != nullptr) trace->emplace_back(g, h);
    for (int it = 0; it < max_iters; ++it) {
      ++result.iters;
      Eigen::ArrayXd cx = g * a.array();
      Eigen::ArrayXd cv = h * c.array();
      Eigen::ArrayXd s2 = cx + cv;
      Eigen::ArrayXd wx = cx / s2;
      Eigen::ArrayXd wv = cv / s2;
      Eigen::ArrayXd cross = cx * cv / s2;
      Eigen::ArrayXd ex2 = wx.square() * periodogram.array() + cross;
      Eigen::ArrayXd ev2 = wv.square() * periodogram.array() + cross;
      double cx_stat = (ex2 / a.array()).sum();
      double cv_stat = (ev2 / c.array()).sum();
      double g_new =
          0.5 * (-A + std::sqrt(A * A + 4.0 * theta * cx_stat));
      double h_new =
          0.5 * (-B + std::sqrt(B * B + 4.0 * gamma * cv_stat));
      g_new = std::max(g_new, kGainFloor);
      h_new = std::max(h_new, kGainFloor);
      double rel = std::fabs(g_new - g) / std::max(g, kGainFloor) +
                   std::fabs(h_new - h) / std::max(h, kGainFloor);
      g = g_new;
      h = h_new;
      if (trace != nullptr) trace->emplace_back(g, h);
      if (rel < tol) {
        result.speech_gain = g;
        result.babble_gain = h;
        return true;
      }
    }
    result.speech_gain = g;
    result.babble_gain = h;
    return false;
  };

  double g0 = std::max(phi * theta, kGainFloor);
  double h0 = std::max(psi * gamma, kGainFloor);
  result.converged = run(g0, h0);
  if (!result.converged) {
    result.restarted = true;
    result.converged = run(1.5 * g0, 1.5 * h0);
  }
  return result;
}

double LaplaceLogWeight(const Eigen::VectorXd& periodogram,
                        const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                        double phi, double theta, double psi, double gamma,
                        double g, double h, bool* clamped) {
  if (clamped != nullptr) *clamped = false;
  g = std::max(g, kGainFloor);
  h = std::max(h, kGainFloor);
  double log_joint =
      LogJointGains(periodogram, a, c, phi, theta, psi, gamma, g, h);
  Eigen::VectorXd sigma2 = g * a + h * c;
  Eigen::Matrix2d neg_hess =
      GainNegativeHessian(periodogram, a, c, phi, psi, sigma2, g, h);
  double det = neg_hess(0, 0) * neg_hess(1, 1) - neg_hess(0, 1) * neg_hess(1, 0);
  if (!std::isfinite(det) || det <= 0.0) {
    det = 1e-12;
    if (clamped != nullptr) *clamped = true;
  }
  return log_joint + std::log(2.0 * M_PI) - 0.5 * std::log(det);
}

void RecursiveScaleUpdate(double posterior_mean_gain, double shape,
                          double forget, double curvature_floor, double* scale,
                          double* information) {
  double s = *scale;
  double score = -shape / s + posterior_mean_gain / (s * s);
  double curvature =
      -shape / (s * s) + 2.0 * posterior_mean_gain / (s * s * s);
  *information = forget * *information + std::max(curvature_floor, curvature);
  // One step may at most halve or double the scale.  Early on the
  // information accumulator is still small and the raw step can exceed
  // the scale itself; an unguarded step that lands at the lower clamp
  // would stick there, since the posterior gain then tracks the prior
  // mode and the score stays negative.  Near the fixed point the step is
  // far inside the band, so steady-state behavior is unchanged.
  double next = std::clamp(s + score / *information, 0.5 * s, 2.0 * s);
  *scale = std::clamp(next, kScaleLo, kScaleHi);
}

OnlineEnhancer::OnlineEnhancer(const CompositeModel& model,
                               const EnhancerConfig& config)
    : model_(model), config_(config) {
  GS_CHECK_INPUT(config.smooth_prev >= 0.0 && config.smooth_new > 0.0,
                 "invalid gain smoothing weights");
  GS_CHECK_INPUT(config.map_max_iters > 0 && config.map_tol > 0.0,
                 "invalid gain solver settings");
  posterior_ = model.speech_stationary * model.babble_stationary.transpose();
  smoothed_gain_ = Eigen::VectorXd::Zero(model.num_bins());
}

void OnlineEnhancer::InitializeScales(double theta0, double gamma0) {
  GS_CHECK_INPUT(theta0 > 0.0 && gamma0 > 0.0,
                 "initial scales must be positive");
  theta_ = std::clamp(theta0, kScaleLo, kScaleHi);
  gamma_ = std::clamp(gamma0, kScaleLo, kScaleHi);
  theta_information_ = config_.initial_information;
  gamma_information_ = config_.initial_information;
  initialized_ = true;
}

Eigen::VectorXd OnlineEnhancer::ProcessFrame(const Eigen::VectorXcd& spectrum,
                                             FrameDiagnostics* diag) {
  GS_CHECK_INPUT(initialized_, "scales were never initialized");
  const int K = model_.num_bins();
  GS_CHECK_INPUT(spectrum.size() == K, "frame has ", spectrum.size(),
                 " bins, model expects ", K);
  const int nbar = model_.num_speech_states();
  const int n2 = model_.num_babble_states();
  const int S = nbar * n2;

  Eigen::VectorXd periodogram = spectrum.cwiseAbs2();
  Eigen::MatrixXd predicted =
      model_.speech_trans.transpose() * posterior_ * model_.babble_trans;

  Eigen::VectorXd log_weight(S), speech_gain(S), babble_gain(S);
  Eigen::MatrixXd state_gain(K, S);
  std::vector<int> restarted(S, 0), clamped(S, 0);
  const double phi = model_.speech_gain_shape;
  const double psi = model_.babble_gain_shape;
  const double theta = theta_;
  const double gamma = gamma_;

  ParallelFor(0, static_cast<std::size_t>(S), config_.threads,
              [&](std::size_t s) {
                const int i = static_cast<int>(s) / n2;
                const int j = static_cast<int>(s) % n2;
                const auto a = model_.speech_scales.col(i);
                const auto c = model_.babble_scales.col(j);
                MapGainsResult map =
                    MapGains(periodogram, a, c, phi, theta, psi, gamma,
                             config_.map_tol, config_.map_max_iters);
                bool was_clamped = false;
                log_weight[s] = LaplaceLogWeight(
                    periodogram, a, c, phi, theta, psi, gamma, map.speech_gain,
                    map.babble_gain, &was_clamped);
                speech_gain[s] = map.speech_gain;
                babble_gain[s] = map.babble_gain;
                restarted[s] = (map.restarted && !map.converged) ? 1 : 0;
                clamped[s] = was_clamped ? 1 : 0;
                Eigen::ArrayXd sx = map.speech_gain * a.array();
                Eigen::ArrayXd sv = map.babble_gain * c.array();
                state_gain.col(s) = (sx / (sx + sv)).matrix();
              });

  // Posterior over composite states.
  Eigen::VectorXd log_zeta(S);
  for (int s = 0; s < S; ++s) {
    double prior = predicted(s / n2, s % n2);
    log_zeta[s] =
        (prior > 0.0 ? std::log(prior) : -kInf) + log_weight[s];
  }
  double max_log = log_zeta.maxCoeff();
  Eigen::VectorXd weights(S);
  bool underflow = false;
  if (!std::isfinite(max_log)) {
    weights.setConstant(1.0 / S);
    underflow = true;
  } else {
    weights = (log_zeta.array() - max_log).exp();
    weights /= weights.sum();
  }

  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(K);
  double mean_speech_gain = 0.0, mean_babble_gain = 0.0;
  for (int s = 0; s < S; ++s) {
    kappa += weights[s] * state_gain.col(s);
    mean_speech_gain += weights[s] * speech_gain[s];
    mean_babble_gain += weights[s] * babble_gain[s];
  }

  for (int s = 0; s < S; ++s)
    posterior_(s / n2, s % n2) = weights[s];

  RecursiveScaleUpdate(mean_speech_gain, phi, config_.theta_forget,
                       config_.curvature_floor, &theta_, &theta_information_);
  RecursiveScaleUpdate(mean_babble_gain, psi, config_.gamma_forget,
                       config_.curvature_floor, &gamma_, &gamma_information_);

  if (first_frame_) {
    smoothed_gain_ = kappa;
    first_frame_ = false;
  } else {
    smoothed_gain_ =
        config_.smooth_prev * smoothed_gain_ + config_.smooth_new * kappa;
  }

  if (diag != nullptr) {
    diag->frame = frame_index_;
    diag->theta = theta_;
    diag->gamma = gamma_;
    int best = 0;
    weights.maxCoeff(&best);
    diag->best_speech_state = best / n2;
    diag->best_babble_state = best % n2;
    diag->mean_gain = smoothed_gain_.mean();
    diag->map_restarts = 0;
    diag->laplace_clamped = 0;
    for (int s = 0; s < S; ++s) {
      diag->map_restarts += restarted[s];
      diag->laplace_clamped += clamped[s];
    }
    diag->underflow = underflow;
  }
  ++frame_index_;
  return smoothed_gain_;
}

EnhanceResult EnhanceSignal(const CompositeModel& model,
                            const Eigen::VectorXd& samples,
                            const FrameConfig& frame,
                            const EnhancerConfig& config) {
  Spectrogram noisy = Stft(samples, frame);
  const int K = noisy.num_bins();
  const int T = noisy.num_frames();
  GS_CHECK_INPUT(K == model.num_bins(),
                 "frame size does not match the model bin count");

  OnlineEnhancer enhancer(model, config);
  double theta0 = config.init_theta;
  double gamma0 = config.init_gamma;
  if (theta0 <= 0.0 || gamma0 <= 0.0) {
    // Leading frames are treated as babble-only; the speech level starts
    // at the same estimate, a 0 dB prior guess that the tracker refines.
    int warmup = std::min(config.init_frames, T);
    GS_CHECK_INPUT(warmup > 0, "no frames to initialize from");
    double mean_power =
        noisy.frames.leftCols(warmup).cwiseAbs2().mean();
    mean_power = std::max(mean_power, 1e-300);
    double babble_match = mean_power /
                          (model.babble_gain_shape * model.babble_scales.mean());
    if (gamma0 <= 0.0) gamma0 = babble_match;
    if (theta0 <= 0.0) theta0 = gamma0;
  }
  enhancer.InitializeScales(theta0, gamma0);

  EnhanceResult result;
  result.gains.resize(K, T);
  result.enhanced.config = noisy.config;
  result.enhanced.frames.resize(K, T);
  result.diagnostics.resize(T);
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd gain =
        enhancer.ProcessFrame(noisy.frames.col(t), &result.diagnostics[t]);
    result.gains.col(t) = gain;
    result.enhanced.frames.col(t) =
        noisy.frames.col(t).cwiseProduct(gain.cast<std::complex<double>>());
  }

  Eigen::VectorXd out = Istft(result.enhanced);
  result.signal = Eigen::VectorXd::Zero(samples.size());
  Eigen::Index copy = std::min(out.size(), samples.size());
  result.signal.head(copy) = out.head(copy);
  result.final_theta = enhancer.theta();
  result.final_gamma = enhancer.gamma();
  return result;
}

}  // namespace gammase
