#pragma once

namespace tidyfit {

/// log Γ(x) for x > 0 (Lanczos, g = 7, 9 coefficients).
double ln_gamma(double x);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double betainc_reg(double a, double b, double x);

/// Two-sided Student-t tail probability P(|T| >= |t|) on `df` degrees of freedom.
double t_two_sided_p(double t, double df);

/// Upper tail P(F' >= f) of the F distribution with (d1, d2) degrees of freedom.
double f_upper_tail_p(double f, double d1, double d2);

/// t with P(T <= t) = prob, found by bisection on t_two_sided_p.
double t_quantile(double prob, double df);

}  // namespace tidyfit
