// Modified Bessel function of the second kind with real order, digamma
// family, and the scalar root solves used by the shape-parameter updates.

#ifndef GAMMASE_SPECIAL_H_
#define GAMMASE_SPECIAL_H_

namespace gammase {

// ln K_nu(x) for real nu and x > 0, usable far outside the range where
// K itself fits in a double (large |nu|, large x).  Strategy: reduce to
// a base order |mu| <= 1/2 (Temme's series for x <= 2, Steed's continued
// fraction for x > 2), then recur upward in log space; the upward
// recurrence for K is the dominant direction and stable.
double LogBesselK(double order, double x);

struct BesselKResult {
  double value;      // may overflow to inf or underflow to 0
  double log_value;  // always finite for valid input
};
BesselKResult BesselK(double order, double x);

// d/dv ln K_v(x) at v = order.  Central difference on ln K with step
// 1e-5 * max(1, |order|), Richardson-extrapolated once.
double LogBesselKOrderDerivative(double order, double x);

// d/dv K_v(x) at v = order (equals K * d/dv ln K; overflows when K does).
double BesselKOrderDerivative(double order, double x);

double Digamma(double u);
double Trigamma(double u);

// Solves digamma(u) = c for u > 0.
double DigammaInverse(double c);

// Solves digamma(u) - ln u = c.  The left side increases from -inf to 0
// over u in (0, inf), so a root exists only for c < 0; for c >= 0 the
// result is pinned at 1e4 with a warning (flat-likelihood regime).
// Newton iteration on ln u, bisection-safeguarded over [-20, ln 1e4].
double SolveShapeEquation(double c);

}  // namespace gammase

#endif  // GAMMASE_SPECIAL_H_
