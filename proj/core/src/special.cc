#include "gammase/special.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gammase/common.h"

namespace gammase {
namespace {

constexpr double kEuler = 0.57721566490153286060651209008;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Temme's auxiliary gammas for |mu| <= 1/2:
//   gampl = 1/Gamma(1+mu), gammi = 1/Gamma(1-mu),
//   gam1  = (gammi - gampl) / (2 mu),  gam2 = (gammi + gampl) / 2.
// gam1 is evaluated via expm1 of lnGamma(1+mu) - lnGamma(1-mu) so the
// mu -> 0 cancellation never happens; for small mu that log difference
// comes from its odd Taylor series (coefficients are zeta values).
void TemmeGammas(double mu, double* gam1, double* gam2, double* gampl,
                 double* gammi) {
  *gampl = 1.0 / std::tgamma(1.0 + mu);
  *gammi = 1.0 / std::tgamma(1.0 - mu);
  double diff;  // lnGamma(1+mu) - lnGamma(1-mu)
  if (std::fabs(mu) < 0.1) {
    constexpr double z3 = 1.20205690315959428540, z5 = 1.03692775514336992633,
                     z7 = 1.00834927738192282684, z9 = 1.00200839282608221442,
                     z11 = 1.00049418860411946456, z13 = 1.00012271334757848915,
                     z15 = 1.00003058823630702049;
    double m2 = mu * mu;
    double s = kEuler +
               m2 * (z3 / 3 +
                     m2 * (z5 / 5 +
                           m2 * (z7 / 7 +
                                 m2 * (z9 / 9 +
                                       m2 * (z11 / 11 +
                                             m2 * (z13 / 13 + m2 * z15 / 15))))));
    diff = -2.0 * mu * s;
  } else {
    diff = std::lgamma(1.0 + mu) - std::lgamma(1.0 - mu);
  }
  *gam1 = (mu == 0.0) ? -kEuler : *gampl * std::expm1(diff) / (2.0 * mu);
  *gam2 = 0.5 * (*gammi + *gampl);
}

// ln K_mu(x) and ln K_{mu+1}(x) for |mu| <= 1/2, x <= 2 (Temme's series).
void LogBesselKBaseSmallX(double mu, double x, double* lk0, double* lk1) {
  double x2 = 0.5 * x;
  double pimu = M_PI * mu;
  double fact = (std::fabs(pimu) < 1e-15) ? 1.0 : pimu / std::sin(pimu);
  double d = -std::log(x2);
  double e = mu * d;
  double fact2 = (std::fabs(e) < 1e-15) ? 1.0 : std::sinh(e) / e;
  double gam1, gam2, gampl, gammi;
  TemmeGammas(mu, &gam1, &gam2, &gampl, &gammi);
  double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
  double sum = ff;
  e = std::exp(e);
  double p = 0.5 * e / gampl;
  double q = 0.5 / (e * gammi);
  double c = 1.0;
  double d2 = x2 * x2;
  double sum1 = p;
  for (int i = 1; i <= 1000; ++i) {
    ff = (i * ff + p + q) / (i * i - mu * mu);
    c *= d2 / i;
    p /= (i - mu);
    q /= (i + mu);
    double del = c * ff;
    sum += del;
    double del1 = c * (p - i * ff);
    sum1 += del1;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  *lk0 = std::log(sum);
  *lk1 = std::log(sum1) + std::log(2.0) - std::log(x);
}

// Same pair for x > 2 via Steed's continued fraction (CF2), evaluated on
// the e^x-scaled function so large x cannot underflow.
void LogBesselKBaseLargeX(double mu, double x, double* lk0, double* lk1) {
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  double a1 = 0.25 - mu * mu;
  double q = a1, c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= 20000; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    double dels = q * delh;
    s += dels;
    if (std::fabs(dels / s) < kEps) break;
  }
  h = a1 * h;
  *lk0 = 0.5 * std::log(M_PI / (2.0 * x)) - x - std::log(s);
  *lk1 = *lk0 + std::log((mu + x + 0.5 - h) / x);
}

}  // namespace

double LogBesselK(double order, double x) {
  GS_CHECK_INPUT(x > 0.0 && std::isfinite(x) && std::isfinite(order),
                 "LogBesselK requires finite order and x > 0, got order=",
                 order, " x=", x);
  double nu = std::fabs(order);  // K is even in its order
  int n = static_cast<int>(std::floor(nu + 0.5));
  double mu = nu - n;  // in [-1/2, 1/2]
  double lk0, lk1;
  if (x <= 2.0) {
    LogBesselKBaseSmallX(mu, x, &lk0, &lk1);
  } else {
    LogBesselKBaseLargeX(mu, x, &lk0, &lk1);
  }
  if (n == 0) return lk0;
  // Upward recurrence K_{v+1} = K_{v-1} + (2v/x) K_v in log space.  The
  // exp argument is <= 0 because K is nondecreasing along the sweep.
  double prev = lk0, cur = lk1;
  for (int j = 1; j < n; ++j) {
    double next = cur + std::log(2.0 * (mu + j) / x + std::exp(prev - cur));
    prev = cur;
    cur = next;
  }
  return cur;
}

BesselKResult BesselK(double order, double x) {
  double lk = LogBesselK(order, x);
  return {std::exp(lk), lk};
}

double LogBesselKOrderDerivative(double order, double x) {
  // Step grows with x: log K_nu(x) scales like -x there, so the finite
  // difference cancels ~x-sized values, while its nu-curvature decays
  // like 1/x and keeps the truncation error negligible.
  double h = 1e-5 * std::max(1.0, std::fabs(order)) + 1e-6 * x;
  auto central = [&](double step) {
    return (LogBesselK(order + step, x) - LogBesselK(order - step, x)) /
           (2.0 * step);
  };
  double d_h = central(h);
  double d_h2 = central(0.5 * h);
  return (4.0 * d_h2 - d_h) / 3.0;
}

double BesselKOrderDerivative(double order, double x) {
  return std::exp(LogBesselK(order, x)) * LogBesselKOrderDerivative(order, x);
}

double Digamma(double u) {
  GS_CHECK_INPUT(u > 0.0 && std::isfinite(u), "Digamma requires u > 0, got ",
                 u);
  double result = 0.0;
  while (u < 8.0) {
    result -= 1.0 / u;
    u += 1.0;
  }
  double inv = 1.0 / u, inv2 = inv * inv;
  double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 - inv2 * 691.0 / 32760)))));
  return result + std::log(u) - 0.5 * inv - series;
}

double Trigamma(double u) {
  GS_CHECK_INPUT(u > 0.0 && std::isfinite(u), "Trigamma requires u > 0, got ",
                 u);
  double result = 0.0;
  while (u < 8.0) {
    result += 1.0 / (u * u);
    u += 1.0;
  }
  double inv = 1.0 / u, inv2 = inv * inv;
  double series =
      inv * (1.0 +
             inv * (0.5 +
                    inv * (1.0 / 6 -
                           inv2 * (1.0 / 30 -
                                   inv2 * (1.0 / 42 -
                                           inv2 * (1.0 / 30 - inv2 * 5.0 / 66))))));
  return result + series;
}

double DigammaInverse(double c) {
  GS_CHECK_INPUT(std::isfinite(c), "DigammaInverse requires finite rhs");
  // Standard initial guess: exp(c)+1/2 on the right branch, -1/(c+Euler)
  // deep on the left where digamma(u) ~ -1/u - Euler.
  double u = (c >= -2.22) ? std::exp(c) + 0.5 : -1.0 / (c + kEuler);
  if (!(u > 0.0) || !std::isfinite(u)) u = 1e-300;
  for (int it = 0; it < 100; ++it) {
    double f = Digamma(u) - c;
    double step = f / Trigamma(u);
    double next = u - step;
    if (!(next > 0.0)) next = 0.5 * u;
    if (std::fabs(next - u) <= 1e-14 * std::fabs(next)) {
      u = next;
      break;
    }
    u = next;
  }
  return u;
}

double SolveShapeEquation(double c) {
  GS_CHECK_INPUT(std::isfinite(c), "shape equation requires finite rhs");
  constexpr double kUpper = 1e4;
  if (c >= 0.0) {
    Warn(internal::StrCat("shape update rhs ", c,
                          " is non-negative; pinning shape at ", kUpper));
    return kUpper;
  }
  double lo = -20.0, hi = std::log(kUpper);  // bracket in t = ln u
  auto eval = [&](double t) { return Digamma(std::exp(t)) - t - c; };
  double flo = eval(lo), fhi = eval(hi);
  if (flo >= 0.0) {
    Warn(internal::StrCat("shape update rhs ", c,
                          " below representable range; pinning shape at ",
                          std::exp(lo)));
    return std::exp(lo);
  }
  if (fhi <= 0.0) {
    Warn(internal::StrCat("shape update rhs ", c,
                          " at solver ceiling; pinning shape at ", kUpper));
    return kUpper;
  }
  // digamma(u) - ln u ~ -1/(2u) for large u, -1/u for small u.
  double t = std::log(-1.0 / (2.0 * c));
  t = std::clamp(t, lo + 1e-12, hi - 1e-12);
  for (int it = 0; it < 200; ++it) {
    double u = std::exp(t);
    double f = Digamma(u) - t - c;
    if (f > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    if (std::fabs(f) < 1e-13) break;
    double df = Trigamma(u) * u - 1.0;  // d/dt of digamma(e^t) - t
    double tn = t - f / df;
    if (!(tn > lo) || !(tn < hi) || !std::isfinite(tn)) tn = 0.5 * (lo + hi);
    if (std::fabs(tn - t) < 1e-15) {
      t = tn;
      break;
    }
    t = tn;
  }
  return std::exp(t);
}

}  // namespace gammase
