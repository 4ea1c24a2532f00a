#ifndef GAMMASE_ENHANCER_H_
#define GAMMASE_ENHANCER_H_

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "gammase/babble_nhmm.h"
#include "gammase/dsp.h"
#include "gammase/speech_hmm.h"

namespace gammase {

struct EnhancerConfig {
  // Gain prior shapes used at enhancement time (the trained shapes are
  // replaced by these fixed, broader priors).
  double speech_gain_shape = 15.0;
  double babble_gain_shape = 15.0;
  // Recursive scale tracking.
  double theta_forget = 0.99;
  double gamma_forget = 0.98;
  double curvature_floor = 100.0;
  double initial_information = 100.0;
  // Temporal smoothing of the spectral gain.
  double smooth_prev = 0.4;
  double smooth_new = 0.6;
  // Scale initialization from the first frames; explicit values override.
  int init_frames = 6;
  double init_theta = 0.0;
  double init_gamma = 0.0;
  // Per-state gain optimization.
  int map_max_iters = 50;
  double map_tol = 1e-6;
  int threads = 1;
};

// Trained models folded into per-state variance templates for the
// exponential-magnitude observation model used online.
struct CompositeModel {
  Eigen::MatrixXd speech_scales;  // K x Nbar
  Eigen::MatrixXd babble_scales;  // K x N2
  Eigen::MatrixXd speech_trans;   // Nbar x Nbar
  Eigen::MatrixXd babble_trans;   // N2 x N2
  Eigen::VectorXd speech_stationary;
  Eigen::VectorXd babble_stationary;
  double speech_gain_shape = 15.0;
  double babble_gain_shape = 15.0;

  int num_bins() const { return static_cast<int>(speech_scales.rows()); }
  int num_speech_states() const {
    return static_cast<int>(speech_scales.cols());
  }
  int num_babble_states() const {
    return static_cast<int>(babble_scales.cols());
  }

  static CompositeModel Build(const SpeechHmm& speech, const BabbleNhmm& babble,
                              const EnhancerConfig& config);
};

// Joint log density of (y, g, h) for one composite state: circular
// complex Gaussian spectrum with variance g*a + h*c plus gamma priors
// on both gains.
double LogJointGains(const Eigen::VectorXd& periodogram, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& c, double phi, double theta,
                     double psi, double gamma, double g, double h);

// Negative Hessian of LogJointGains in (g, h).
Eigen::Matrix2d GainNegativeHessian(const Eigen::VectorXd& periodogram,
                                    const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& c, double phi,
                                    double psi, const Eigen::VectorXd& sigma2,
                                    double g, double h);

struct MapGainsResult {
  double speech_gain = 0.0;
  double babble_gain = 0.0;
  int iters = 0;
  bool converged = false;
  bool restarted = false;
};

// Joint MAP estimate of the two frame gains by alternating posterior
// moment updates (an exact EM on the hidden clean/noise spectra).
// `trace`, when given, receives every (g, h) iterate in order.
MapGainsResult MapGains(const Eigen::VectorXd& periodogram,
                        const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                        double phi, double theta, double psi, double gamma,
                        double tol = 1e-6, int max_iters = 50,
                        std::vector<std::pair<double, double>>* trace = nullptr);

// Laplace approximation of ln integral f(y, g, h) dg dh around the MAP
// point.  Sets *clamped when the curvature term had to be floored.
double LaplaceLogWeight(const Eigen::VectorXd& periodogram,
                        const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                        double phi, double theta, double psi, double gamma,
                        double g, double h, bool* clamped);

// One stochastic-approximation step of a gamma scale parameter from the
// posterior mean gain of the current frame.
void RecursiveScaleUpdate(double posterior_mean_gain, double shape,
                          double forget, double curvature_floor, double* scale,
                          double* information);

struct FrameDiagnostics {
  int frame = 0;
  double theta = 0.0;
  double gamma = 0.0;
  int best_speech_state = 0;
  int best_babble_state = 0;
  double mean_gain = 0.0;
  int map_restarts = 0;
  int laplace_clamped = 0;
  bool underflow = false;
};

// Strictly causal frame-by-frame enhancer.  Feed STFT frames in order;
// each call returns the smoothed spectral gain for that frame.
class OnlineEnhancer {
 public:
  OnlineEnhancer(const CompositeModel& model, const EnhancerConfig& config);

  // Must be called once before the first frame.
  void InitializeScales(double theta0, double gamma0);
  bool initialized() const { return initialized_; }

  Eigen::VectorXd ProcessFrame(const Eigen::VectorXcd& spectrum,
                               FrameDiagnostics* diag = nullptr);

  double theta() const { return theta_; }
  double gamma() const { return gamma_; }
  const Eigen::MatrixXd& posterior() const { return posterior_; }

 private:
  const CompositeModel& model_;
  EnhancerConfig config_;
  bool initialized_ = false;
  bool first_frame_ = true;
  int frame_index_ = 0;
  double theta_ = 0.0;
  double gamma_ = 0.0;
  double theta_information_ = 0.0;
  double gamma_information_ = 0.0;
  Eigen::MatrixXd posterior_;      // Nbar x N2
  Eigen::VectorXd smoothed_gain_;  // K
};

struct EnhanceResult {
  Eigen::VectorXd signal;  // same length as the input
  Eigen::MatrixXd gains;   // K x T smoothed spectral gains
  Spectrogram enhanced;
  std::vector<FrameDiagnostics> diagnostics;
  double final_theta = 0.0;
  double final_gamma = 0.0;
};

EnhanceResult EnhanceSignal(const CompositeModel& model,
                            const Eigen::VectorXd& samples,
                            const FrameConfig& frame,
                            const EnhancerConfig& config);

}  // namespace gammase

#endif  // GAMMASE_ENHANCER_H_
