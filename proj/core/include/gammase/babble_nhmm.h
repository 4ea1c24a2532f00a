// Nonnegative HMM for multi-talker babble.  Each state mixes the speech
// model's spectral basis through a nonnegative weight vector, so babble
// states live in the span of speech spectra; training alternates exact
// EM updates with a difference-of-convex (concave-convex) descent on the
// weights.

#ifndef GAMMASE_BABBLE_NHMM_H_
#define GAMMASE_BABBLE_NHMM_H_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gammase/speech_hmm.h"

namespace gammase {

struct BabbleNhmm {
  Eigen::MatrixXd trans;         // N2 x N2, ergodic, rows sum to 1
  Eigen::MatrixXd weights;       // Nbar x N2, nonnegative columns
  Eigen::VectorXd shape;         // K, per-bin gamma shapes beta
  double gain_shape = 15.0;
  Eigen::MatrixXd speech_basis;  // K x Nbar, copied from the speech model

  int num_states() const { return static_cast<int>(trans.rows()); }
  int num_bins() const { return static_cast<int>(speech_basis.rows()); }
  // Per-state spectral scale vectors, K x N2 = speech_basis * weights.
  Eigen::MatrixXd StateScales() const { return speech_basis * weights; }
  void Validate() const;
};

// Gain-marginalized per-frame log-likelihoods (T x N2); power must be
// strictly positive.  gamma is the babble gain prior scale.
Eigen::MatrixXd BabbleStateLogLik(const BabbleNhmm& model, double gamma,
                                  const Eigen::MatrixXd& power);

GigParams BabbleGainPosterior(const BabbleNhmm& model, double gamma,
                              const Eigen::VectorXd& power_frame, int state);

// Occupancy-weighted statistics feeding the per-bin shape update:
// rhs_sum_k = sum over frames/states of w * (ln o_k - ln scale_k - E(ln H)).
struct ShapeUpdateStats {
  Eigen::VectorXd rhs_sum;  // K
  double total_weight = 0.0;
};

// beta_k = digamma^{-1}(rhs_sum_k / total_weight).
Eigen::VectorXd UpdateBabbleShapes(const ShapeUpdateStats& stats);

// Per-state sufficient statistics for the weight update.
struct CccpStats {
  Eigen::VectorXd weighted_obs;  // K: sum of w * o_k * E(1/H)
  double occupancy = 0.0;        // sum of w
};

// The per-state negative expected complete log-likelihood restricted to
// the weight vector (up to constants): convex data term plus concave
// log-determinant-style term,
//   sum_k weighted_obs_k / [B x]_k  +  occupancy * sum_k beta_k ln [B x]_k.
double CccpWeightObjective(const Eigen::VectorXd& x, const CccpStats& stats,
                           const Eigen::MatrixXd& speech_basis,
                           const Eigen::VectorXd& shape);
Eigen::VectorXd CccpWeightGradient(const Eigen::VectorXd& x,
                                   const CccpStats& stats,
                                   const Eigen::MatrixXd& speech_basis,
                                   const Eigen::VectorXd& shape);
Eigen::MatrixXd CccpWeightHessian(const Eigen::VectorXd& x,
                                  const CccpStats& stats,
                                  const Eigen::MatrixXd& speech_basis,
                                  const Eigen::VectorXd& shape);

// One concave-convex round: linearizes the concave part at `current` and
// minimizes the resulting convex program over x >= 0 by projected Newton
// with an Armijo backtracking line search (projected gradient fallback).
// Never increases CccpWeightObjective.
Eigen::VectorXd CccpStep(const Eigen::VectorXd& current,
                         const CccpStats& stats,
                         const Eigen::MatrixXd& speech_basis,
                         const Eigen::VectorXd& shape);

// K-means initialization of the weight columns from per-speaker basis
// coefficient matrices (summed elementwise; streams must be aligned).
// Throws InputError if fewer columns than states.
Eigen::MatrixXd InitBabbleWeights(
    const std::vector<Eigen::MatrixXd>& coefficient_streams, int num_states);

struct BabbleTrainOptions {
  int num_states = 10;
  int max_iters = 30;
  double gain_shape_init = 15.0;
  int cccp_rounds = 3;  // weight-update rounds per state per EM iteration
  int threads = 1;
};

struct BabbleTrainResult {
  BabbleNhmm model;
  std::vector<double> gain_scales;  // gamma_r per recording
  std::vector<double> loglik_history;
};

// EM training against a frozen speech basis.  If speaker_coefficients is
// null the initializer projects the babble recordings themselves through
// the speech model instead of per-speaker streams.
BabbleTrainResult TrainBabbleNhmm(
    const SpeechHmm& speech, const std::vector<Eigen::MatrixXd>& powers,
    const BabbleTrainOptions& opts,
    const std::vector<Eigen::MatrixXd>* speaker_coefficients = nullptr);

// Babble counterpart of NmfProject: soft state activations times expected
// gain against the shape-scaled per-state spectra.
NmfProjection BabbleNmfProject(const BabbleNhmm& model, double gamma,
                               const Eigen::MatrixXd& power);

double BabbleMomentMatchGainScale(const BabbleNhmm& model,
                                  const Eigen::MatrixXd& power);

}  // namespace gammase

#endif  // GAMMASE_BABBLE_NHMM_H_
