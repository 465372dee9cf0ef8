#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tidyfit/formula.hpp"
#include "tidyfit/frame.hpp"
#include "tidyfit/types.hpp"

namespace tidyfit {

struct NlsControls {
  int max_iter = 50;
  double tol = 1e-8;
  double min_step_factor = 1.0 / 1024.0;
};

struct NlsFit {
  std::vector<std::string> parameter_names;
  VectorXd estimates;
  MatrixXd jtj_inverse;  // at the solution
  VectorXd residuals;
  VectorXd fitted;
  double sigma = 0.0;
  double rss = 0.0;
  std::size_t n = 0;
  std::size_t q = 0;
  int iterations = 0;
  double achieved_tol = 0.0;
  bool converged = false;
  /// rss after every accepted step, starting with the rss at the start values.
  std::vector<double> rss_trace;
  /// Parameter vector matching each rss_trace entry.
  std::vector<VectorXd> estimate_trace;

  std::size_t df_residual() const { return n - q; }
};

/// Raised when Gauss-Newton runs out of iterations or step halving fails.
class NlsConvergenceError : public Error {
 public:
  NlsConvergenceError(const std::string& message, std::vector<double> last_estimates)
      : Error(ErrorKind::Convergence, message), last_estimates_(std::move(last_estimates)) {}

  const std::vector<double>& last_estimates() const { return last_estimates_; }

 private:
  std::vector<double> last_estimates_;
};

/// Gauss-Newton with step halving on symbolic Jacobians. After every accepted
/// step the fit is declared converged when either the realised relative rss
/// decrease or the decrease predicted by the next linearised step falls below
/// `tol`; the value of the test that fired is reported as achieved_tol.
NlsFit fit_nls(const NlsFormula& formula, const Frame& frame, const NlsControls& controls = {});

/// term, estimate, std.error, statistic, p.value
Frame tidy_nls(const NlsFit& fit);

/// Every column of `frame`, then .fitted and .resid.
Frame augment_nls(const NlsFit& fit, const Frame& frame);

/// sigma, converged, achieved.tol, logLik, AIC, BIC, deviance, df.residual
Frame glance_nls(const NlsFit& fit);

}  // namespace tidyfit
