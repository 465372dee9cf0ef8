#include "tidyfit/dist.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tidyfit/error.hpp"

namespace tidyfit {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

constexpr int kMaxFractionTerms = 300;
constexpr double kFractionEps = 1e-15;
constexpr double kTiny = 1e-300;

/// Continued fraction for I_x(a, b), evaluated with the modified Lentz method.
double beta_fraction(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxFractionTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kFractionEps) return h;
  }
  throw Error(ErrorKind::Internal, "incomplete beta continued fraction did not converge (a=" +
                                       std::to_string(a) + ", b=" + std::to_string(b) +
                                       ", x=" + std::to_string(x) + ")");
}

}  // namespace

double ln_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorKind::Domain, "ln_gamma requires x > 0");
  if (x < 0.5) {
    // reflection: Γ(x)Γ(1-x) = π / sin(πx)
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - ln_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double sum = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) sum += kLanczos[i] / (z + static_cast<double>(i));
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

double betainc_reg(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0))
    throw Error(ErrorKind::Domain, "betainc_reg requires a > 0, b > 0, 0 <= x <= 1");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) -
                           (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b));
  if (x > (a + 1.0) / (a + b + 2.0)) {
    return 1.0 - std::exp(log_front) * beta_fraction(b, a, 1.0 - x) / b;
  }
  return std::exp(log_front) * beta_fraction(a, b, x) / a;
}

double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorKind::Domain, "t distribution requires df > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double p = betainc_reg(df / 2.0, 0.5, df / (df + t * t));
  return std::clamp(p, 0.0, 1.0);
}

double f_upper_tail_p(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error(ErrorKind::Domain, "F distribution requires positive df");
  if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
  if (f < 0.0) throw Error(ErrorKind::Domain, "F statistic must be non-negative");
  if (std::isinf(f)) return 0.0;
  const double p = betainc_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
  return std::clamp(p, 0.0, 1.0);
}

double t_quantile(double prob, double df) {
  if (!(df > 0.0)) throw Error(ErrorKind::Domain, "t distribution requires df > 0");
  if (!(prob > 0.0 && prob < 1.0)) throw Error(ErrorKind::Domain, "t quantile requires 0 < prob < 1");
  if (prob == 0.5) return 0.0;
  // P(T <= t) = prob  <=>  two-sided tail at |t| equals 2 * min(prob, 1 - prob)
  const double target = 2.0 * std::min(prob, 1.0 - prob);
  double lo = 0.0, hi = 1.0;
  while (t_two_sided_p(hi, df) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  for (int iter = 0; iter < 400 && hi - lo > 1e-10; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (t_two_sided_p(mid, df) > target) lo = mid;
    else hi = mid;
  }
  const double t = 0.5 * (lo + hi);
  return prob > 0.5 ? t : -t;
}

}  // namespace tidyfit
