// Ergodic hidden Markov model whose states emit per-bin gamma-distributed
// spectral power, scaled by a frame-wise gamma-distributed stochastic
// gain.  The gain marginalizes in closed form through Bessel-K, which is
// what makes exact EM training and probabilistic basis projections cheap.

#ifndef GAMMASE_SPEECH_HMM_H_
#define GAMMASE_SPEECH_HMM_H_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gammase/gig.h"

namespace gammase {

struct SpeechHmm {
  Eigen::MatrixXd trans;  // N x N, ergodic, rows sum to 1
  Eigen::MatrixXd basis;  // K x N, per-state gamma scales b, all > 0
  Eigen::VectorXd shape;  // K, per-bin gamma shapes alpha, all > 0
  double gain_shape = 15.0;

  int num_states() const { return static_cast<int>(trans.rows()); }
  int num_bins() const { return static_cast<int>(basis.rows()); }
  void Validate() const;
};

// Stationary distribution of a row-stochastic matrix by power iteration
// (L1 tolerance 1e-12).  Used as the initial state distribution, keeping
// the chain's ergodic reading consistent.
Eigen::VectorXd StationaryDistribution(const Eigen::MatrixXd& trans);

// Log-likelihood of each frame under each state with the gain integrated
// out analytically; power is K x T and must be strictly positive (run
// FloorPeriodogram first).  theta is the gain prior scale.  Returns T x N.
Eigen::MatrixXd StateLogLik(const SpeechHmm& model, double theta,
                            const Eigen::MatrixXd& power);

struct ForwardBackwardResult {
  Eigen::MatrixXd posteriors;    // T x N, rows sum to 1
  Eigen::MatrixXd pairwise_sum;  // N x N, sum over t of P(s_t=i, s_t+1=j | O)
  double loglik = 0.0;
};

// Scaled forward-backward over per-frame log-likelihoods (T x N).  The
// per-frame scaling constants are floored at 1e-300.
ForwardBackwardResult ForwardBackward(const Eigen::MatrixXd& frame_loglik,
                                      const Eigen::MatrixXd& trans,
                                      const Eigen::VectorXd& initial);

// Posterior of the frame gain given a state: GIG with order
// phi - sum(alpha), rate 1/theta, tau = sum_k o_k / b_ki.  An empty
// frame yields the prior (order phi, tau 0).
GigParams GainPosterior(const SpeechHmm& model, double theta,
                        const Eigen::VectorXd& power_frame, int state);

struct SpeechTrainOptions {
  int num_states = 55;
  int max_iters = 30;
  double gain_shape_init = 15.0;
  std::uint64_t seed = 0;
  int threads = 1;
  // Frames fed to k-means are capped at this count (seeded subsample).
  int max_kmeans_frames = 20000;
};

struct SpeechTrainResult {
  SpeechHmm model;
  std::vector<double> gain_scales;     // theta_r, one per utterance
  std::vector<double> loglik_history;  // data log-likelihood per iteration
};

// Full EM training on a list of power spectrograms (one per recording).
// Each recording keeps its own gain prior scale theta_r; shapes, basis
// and transitions are shared.  Flooring is applied internally.
SpeechTrainResult TrainSpeechHmm(const std::vector<Eigen::MatrixXd>& powers,
                                 const SpeechTrainOptions& opts);

struct NmfProjection {
  Eigen::MatrixXd coefficients;  // N x T, u_t(i) = posterior * E(G | i, o_t)
  Eigen::MatrixXd approx;        // K x T, (alpha .* basis) * coefficients
};

// Probabilistic counterpart of a nonnegative factorization: soft state
// activations weighted by the expected gain, against the shape-scaled
// basis.
NmfProjection NmfProject(const SpeechHmm& model, double theta,
                         const Eigen::MatrixXd& power);

// Moment-matched gain scale for a recording the model has not seen;
// also used to initialize theta_r in training.
double MomentMatchGainScale(const SpeechHmm& model,
                            const Eigen::MatrixXd& power);

}  // namespace gammase

#endif  // GAMMASE_SPEECH_HMM_H_
