#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tidyfit/formula.hpp"
#include "tidyfit/frame.hpp"
#include "tidyfit/types.hpp"

namespace tidyfit {

/// Frame and formula an LmFit came from; augment uses it to carry the raw
/// modeled columns and row labels.
struct LmSource {
  std::shared_ptr<const Frame> frame;
  LinearFormula formula;
};

struct LmFit {
  std::vector<std::string> term_names;
  VectorXd coefficients;
  MatrixXd xtx_inverse;
  VectorXd residuals;
  VectorXd fitted;
  VectorXd hat;
  double sigma = 0.0;
  double rss = 0.0;
  double tss = 0.0;  // centered
  std::size_t n = 0;
  std::size_t p = 0;
  std::optional<LmSource> source;

  std::size_t df_residual() const { return n - p; }
};

/// Least squares through a Householder QR of `x` (never the normal
/// equations). Rank deficiency is an error naming the aliased term.
LmFit fit_ols(const MatrixXd& x, const VectorXd& y, std::vector<std::string> names);

/// design_matrix + fit_ols, remembering the source for augment_lm.
LmFit fit_lm(const LinearFormula& formula, const Frame& frame);

/// term, estimate, std.error, statistic, p.value [, conf.low, conf.high]
Frame tidy_lm(const LmFit& fit, std::optional<double> conf_level = std::nullopt);

/// [.rownames], modeled columns, .fitted, .se.fit, .resid, .hat, .sigma,
/// .cooksd, .std.resid
Frame augment_lm(const LmFit& fit);

/// r.squared, adj.r.squared, sigma, statistic, p.value, df, logLik, AIC, BIC,
/// deviance, df.residual
Frame glance_lm(const LmFit& fit);

/// Wald statistic column policy shared by the tidiers: a zero standard error
/// gives a signed infinite statistic.
double wald_statistic(double estimate, double std_error);

}  // namespace tidyfit
