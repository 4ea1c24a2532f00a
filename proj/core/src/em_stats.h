// Internal: per-recording E-step sufficient statistics shared by the
// speech and babble trainers (the babble model evaluates through the
// same gain-marginalized form after wrapping its per-state scales).

#ifndef GAMMASE_SRC_EM_STATS_H_
#define GAMMASE_SRC_EM_STATS_H_

#include <Eigen/Dense>

#include "gammase/speech_hmm.h"

namespace gammase {
namespace internal {

struct UtteranceStats {
  double loglik = 0.0;
  Eigen::MatrixXd pairwise;        // N x N transition posteriors, summed
  Eigen::MatrixXd weighted_obs;    // K x N: sum_t w_ti o_kt E(1/G)_ti
  Eigen::VectorXd occupancy;       // N
  double sum_post_log_gain = 0.0;  // sum_{t,i} w_ti E(ln G)_ti
  double sum_post_gain = 0.0;      // sum_{t,i} w_ti E(G)_ti
  Eigen::VectorXd sum_log_power;   // K: sum_t ln o_kt
};

UtteranceStats AccumulateUtterance(const SpeechHmm& model, double theta,
                                   const Eigen::VectorXd& initial,
                                   const Eigen::MatrixXd& power);

}  // namespace internal
}  // namespace gammase

#endif  // GAMMASE_SRC_EM_STATS_H_
