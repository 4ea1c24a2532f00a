#include "gammase/gig.h"

#include <cmath>

#include "gammase/common.h"
#include "gammase/special.h"

namespace gammase {

GigMoments ComputeGigMoments(const GigParams& p) {
  GS_CHECK_INPUT(p.rate > 0.0 && std::isfinite(p.rate),
                 "GIG rate must be positive, got ", p.rate);
  GS_CHECK_INPUT(p.tau >= 0.0 && std::isfinite(p.tau),
                 "GIG tau must be non-negative, got ", p.tau);
  GS_CHECK_INPUT(std::isfinite(p.order), "GIG order must be finite");

  double x = 2.0 * std::sqrt(p.rate * p.tau);
  if (x < 1e-12) {
    // Gamma limit: density ~ g^(order-1) exp(-rate*g).
    GS_CHECK_INPUT(p.order > 0.0,
                   "gamma-limit gain posterior requires positive order, got ",
                   p.order, " (tau=", p.tau, ")");
    GigMoments m;
    m.mean = p.order / p.rate;
    GS_CHECK_INPUT(p.order > 1.0,
                   "E(1/G) undefined in the gamma limit for order <= 1, got ",
                   p.order);
    m.mean_inv = p.rate / (p.order - 1.0);
    m.mean_log = Digamma(p.order) - std::log(p.rate);
    return m;
  }

  double lk0 = LogBesselK(p.order, x);
  double lk_plus = LogBesselK(p.order + 1.0, x);
  double lk_minus = LogBesselK(p.order - 1.0, x);
  double half_log_scale = 0.5 * (std::log(p.tau) - std::log(p.rate));
  GigMoments m;
  m.mean = std::exp(lk_plus - lk0 + half_log_scale);
  m.mean_inv = std::exp(lk_minus - lk0 - half_log_scale);
  m.mean_log = LogBesselKOrderDerivative(p.order, x) + half_log_scale;
  GS_CHECK_NUMERIC(std::isfinite(m.mean) && std::isfinite(m.mean_inv) &&
                       std::isfinite(m.mean_log),
                   "GIG moments overflowed for order=", p.order,
                   " rate=", p.rate, " tau=", p.tau);
  return m;
}

}  // namespace gammase
