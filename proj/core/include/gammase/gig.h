// Generalized inverse Gaussian moments.  The spectral gain posterior of
// every hidden state lands in this family, so these moments drive both
// the EM trainers and the NMF-style projections.

#ifndef GAMMASE_GIG_H_
#define GAMMASE_GIG_H_

namespace gammase {

// Density proportional to g^(order-1) * exp(-rate*g - tau/g) on g > 0.
// rate > 0; tau >= 0; if tau == 0 the family degenerates to a gamma
// distribution, which requires order > 0.
struct GigParams {
  double order = 1.0;
  double rate = 1.0;
  double tau = 0.0;
};

struct GigMoments {
  double mean;      // E(G)
  double mean_inv;  // E(1/G)
  double mean_log;  // E(ln G)
};

// Closed-form moments via Bessel-K ratios; ratios are formed from log
// values so extreme orders and arguments stay finite.  When
// 2*sqrt(rate*tau) < 1e-12 the gamma-limit expressions are used instead
// (E(1/G) then requires order > 1).
GigMoments ComputeGigMoments(const GigParams& p);

}  // namespace gammase

#endif  // GAMMASE_GIG_H_
