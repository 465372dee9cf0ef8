#include "tidyfit/nls.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tidyfit/dist.hpp"
#include "tidyfit/linreg.hpp"

namespace tidyfit {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kGradientTolerance = 1e-6;

VectorXd broadcast(VectorXd v, Eigen::Index n) {
  if (v.size() == n) return v;
  if (v.size() == 1) return VectorXd::Constant(n, v(0));
  throw Error(ErrorKind::Argument, "model evaluated to " + std::to_string(v.size()) +
                                       " values, expected " + std::to_string(n));
}

bool all_finite(const VectorXd& v) { return v.allFinite(); }

/// Linearised Gauss-Newton step at the current iterate.
struct LinearStep {
  VectorXd delta;
  double predicted_relative_decrease = 0.0;
  bool stationary = false;  // |J'r| small relative to |r| |J|
  MatrixXd r;  // triangular factor of the Jacobian
};

class Problem {
 public:
  Problem(const NlsFormula& formula, const Frame& frame) : formula_(formula) {
    names_ = formula.parameter_names();
    for (const auto& p : names_)
      if (frame.has_column(p))
        throw Error(ErrorKind::Argument, "parameter '" + p + "' has the same name as a data column");
    for (const auto& s : formula.data_symbols())
      if (!frame.has_column(s))
        throw Error(ErrorKind::Schema, "symbol '" + s + "' is neither a data column nor a parameter");
    data_ = bind_columns(frame, formula.data_symbols());
    n_ = static_cast<Eigen::Index>(frame.n_rows());
    y_ = broadcast(eval_expr(*formula.response, data_), n_);
    if (!all_finite(y_)) throw Error(ErrorKind::Argument, "response contains non-finite values");
    for (const auto& p : names_) partials_.push_back(differentiate(formula.rhs, p));
  }

  Eigen::Index n() const { return n_; }
  Eigen::Index q() const { return static_cast<Eigen::Index>(names_.size()); }
  const VectorXd& y() const { return y_; }
  const std::vector<std::string>& names() const { return names_; }

  VectorXd model(const VectorXd& theta) const {
    return broadcast(eval_expr(*formula_.rhs, bind(theta)), n_);
  }

  MatrixXd jacobian(const VectorXd& theta) const {
    const Bindings b = bind(theta);
    MatrixXd j(n_, q());
    for (Eigen::Index k = 0; k < q(); ++k)
      j.col(k) = broadcast(eval_expr(*partials_[static_cast<std::size_t>(k)], b), n_);
    return j;
  }

  LinearStep step(const VectorXd& theta, const VectorXd& residuals, double rss) const {
    const MatrixXd j = jacobian(theta);
    if (!j.allFinite()) throw Error(ErrorKind::SingularGradient, "gradient contains non-finite values");
    const Eigen::HouseholderQR<MatrixXd> qr(j);
    MatrixXd r = qr.matrixQR().topRows(q()).triangularView<Eigen::Upper>();
    const double scale = r.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < q(); ++k)
      if (!(std::abs(r(k, k)) > kRankTolerance * scale))
        throw Error(ErrorKind::SingularGradient,
                    "singular gradient: parameter '" + names_[static_cast<std::size_t>(k)] +
                        "' is not identifiable at the current iterate");
    const VectorXd qtr = (qr.householderQ().transpose() * residuals).head(q());
    LinearStep out;
    out.delta = r.triangularView<Eigen::Upper>().solve(qtr);
    out.predicted_relative_decrease = rss > 0.0 ? qtr.squaredNorm() / rss : 0.0;
    const double gradient = (j.transpose() * residuals).cwiseAbs().maxCoeff();
    out.stationary = gradient <= kGradientTolerance * std::sqrt(rss) * j.cwiseAbs().rowwise().sum().maxCoeff();
    out.r = std::move(r);
    return out;
  }

 private:
  Bindings bind(const VectorXd& theta) const {
    Bindings b = data_;
    for (std::size_t k = 0; k < names_.size(); ++k) b[names_[k]] = theta(static_cast<Eigen::Index>(k));
    return b;
  }

  const NlsFormula& formula_;
  std::vector<std::string> names_;
  std::vector<ExprPtr> partials_;
  Bindings data_;
  VectorXd y_;
  Eigen::Index n_ = 0;
};

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double log_likelihood(double rss, double n) {
  return -n / 2.0 * (std::log(2.0 * std::numbers::pi) + std::log(rss / n) + 1.0);
}

}  // namespace

NlsFit fit_nls(const NlsFormula& formula, const Frame& frame, const NlsControls& controls) {
  const Problem problem(formula, frame);
  const auto n = problem.n();
  const auto q = problem.q();
  if (n <= q)
    throw Error(ErrorKind::InsufficientData, "need more observations (" + std::to_string(n) +
                                                 ") than parameters (" + std::to_string(q) + ")");

  VectorXd theta(q);
  for (Eigen::Index k = 0; k < q; ++k) theta(k) = formula.parameters[static_cast<std::size_t>(k)].second;

  VectorXd residuals = problem.y() - problem.model(theta);
  double rss = residuals.squaredNorm();
  if (!std::isfinite(rss)) throw Error(ErrorKind::BadStart, "model is not finite at the start values");

  NlsFit fit;
  fit.rss_trace.push_back(rss);
  fit.estimate_trace.push_back(theta);
  LinearStep lin = problem.step(theta, residuals, rss);

  while (!fit.converged) {
    if (fit.iterations >= controls.max_iter)
      throw NlsConvergenceError("no convergence after " + std::to_string(controls.max_iter) + " iterations",
                                to_std(theta));
    bool accepted = false;
    VectorXd next_theta, next_residuals;
    double next_rss = 0.0;
    for (double factor = 1.0; factor >= controls.min_step_factor; factor /= 2.0) {
      next_theta = theta + factor * lin.delta;
      next_residuals = problem.y() - problem.model(next_theta);
      next_rss = next_residuals.squaredNorm();
      if (std::isfinite(next_rss) && next_rss <= rss) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NlsConvergenceError("step factor reduced below the minimum without decreasing rss",
                                to_std(theta));

    ++fit.iterations;
    const double realised = rss > 0.0 ? (rss - next_rss) / rss : 0.0;
    theta = std::move(next_theta);
    residuals = std::move(next_residuals);
    rss = next_rss;
    fit.rss_trace.push_back(rss);
    fit.estimate_trace.push_back(theta);

    lin = problem.step(theta, residuals, rss);
    if (!lin.stationary) continue;
    if (realised < controls.tol) {
      fit.converged = true;
      fit.achieved_tol = realised;
    } else if (lin.predicted_relative_decrease < controls.tol) {
      fit.converged = true;
      fit.achieved_tol = lin.predicted_relative_decrease;
    }
  }

  const auto upper = lin.r.triangularView<Eigen::Upper>();
  const MatrixXd r_inv = upper.solve(MatrixXd::Identity(q, q));
  fit.parameter_names = problem.names();
  fit.estimates = theta;
  fit.jtj_inverse = r_inv * r_inv.transpose();
  fit.residuals = residuals;
  fit.fitted = problem.y() - residuals;
  fit.rss = rss;
  fit.n = static_cast<std::size_t>(n);
  fit.q = static_cast<std::size_t>(q);
  fit.sigma = std::sqrt(rss / static_cast<double>(n - q));
  return fit;
}

Frame tidy_nls(const NlsFit& fit) {
  if (!fit.converged) throw Error(ErrorKind::Argument, "cannot tidy an unconverged fit");
  const double df = static_cast<double>(fit.df_residual());
  std::vector<double> estimate(fit.q), std_error(fit.q), statistic(fit.q), p_value(fit.q);
  for (std::size_t j = 0; j < fit.q; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    estimate[j] = fit.estimates(jj);
    std_error[j] = fit.sigma * std::sqrt(fit.jtj_inverse(jj, jj));
    statistic[j] = wald_statistic(estimate[j], std_error[j]);
    p_value[j] = t_two_sided_p(statistic[j], df);
  }
  return Frame({Column::texts("term", fit.parameter_names), Column::floats("estimate", estimate),
                Column::floats("std.error", std_error), Column::floats("statistic", statistic),
                Column::floats("p.value", p_value)});
}

Frame augment_nls(const NlsFit& fit, const Frame& frame) {
  if (frame.n_rows() != fit.n)
    throw Error(ErrorKind::Argument, "frame has " + std::to_string(frame.n_rows()) +
                                         " rows but the fit used " + std::to_string(fit.n));
  std::vector<Column> front;
  if (frame.row_labels()) front.push_back(Column::texts(".rownames", *frame.row_labels()));
  return frame.without_labels()
      .prepend(std::move(front))
      .append({Column::floats(".fitted", to_std(fit.fitted)), Column::floats(".resid", to_std(fit.residuals))});
}

Frame glance_nls(const NlsFit& fit) {
  const double n = static_cast<double>(fit.n);
  const double k = static_cast<double>(fit.q) + 1.0;
  const double ll = log_likelihood(fit.rss, n);
  return Frame({Column::floats("sigma", {fit.sigma}),
                Column::booleans("converged", {fit.converged}),
                Column::floats("achieved.tol", {fit.achieved_tol}),
                Column::floats("logLik", {ll}),
                Column::floats("AIC", {-2.0 * ll + 2.0 * k}),
                Column::floats("BIC", {-2.0 * ll + std::log(n) * k}),
                Column::floats("deviance", {fit.rss}),
                Column::integers("df.residual", {static_cast<std::int64_t>(fit.df_residual())})});
}

}  // namespace tidyfit
