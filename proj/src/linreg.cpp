#include "tidyfit/linreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tidyfit/dist.hpp"

namespace tidyfit {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

double wald_statistic(double estimate, double std_error) {
  if (std_error == 0.0) return std::copysign(std::numeric_limits<double>::infinity(), estimate);
  return estimate / std_error;
}

LmFit fit_ols(const MatrixXd& x, const VectorXd& y, std::vector<std::string> names) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (y.size() != n) throw Error(ErrorKind::Argument, "response length does not match design rows");
  if (static_cast<Eigen::Index>(names.size()) != p)
    throw Error(ErrorKind::Argument, "term name count does not match design columns");
  if (n <= p)
    throw Error(ErrorKind::InsufficientData, "need more observations (" + std::to_string(n) +
                                                 ") than coefficients (" + std::to_string(p) + ")");

  const Eigen::HouseholderQR<MatrixXd> qr(x);
  const MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double scale = r.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < p; ++k)
    if (std::abs(r(k, k)) <= kRankTolerance * scale)
      throw Error(ErrorKind::SingularDesign, "design matrix is rank deficient: term '" +
                                                 names[static_cast<std::size_t>(k)] + "' is aliased");

  const MatrixXd q1 = qr.householderQ() * MatrixXd::Identity(n, p);
  const auto upper = r.triangularView<Eigen::Upper>();

  LmFit fit;
  fit.term_names = std::move(names);
  fit.coefficients = upper.solve(q1.transpose() * y);
  const MatrixXd r_inv = upper.solve(MatrixXd::Identity(p, p));
  fit.xtx_inverse = r_inv * r_inv.transpose();
  fit.fitted = x * fit.coefficients;
  fit.residuals = y - fit.fitted;
  fit.hat = q1.rowwise().squaredNorm();
  fit.rss = fit.residuals.squaredNorm();
  fit.tss = (y.array() - y.mean()).matrix().squaredNorm();
  fit.n = static_cast<std::size_t>(n);
  fit.p = static_cast<std::size_t>(p);
  fit.sigma = std::sqrt(fit.rss / static_cast<double>(n - p));
  return fit;
}

LmFit fit_lm(const LinearFormula& formula, const Frame& frame) {
  auto design = design_matrix(formula, frame);
  LmFit fit = fit_ols(design.x, design.y, std::move(design.names));
  fit.source = LmSource{std::make_shared<const Frame>(frame), formula};
  return fit;
}

Frame tidy_lm(const LmFit& fit, std::optional<double> conf_level) {
  const auto p = fit.p;
  const double df = static_cast<double>(fit.df_residual());
  std::vector<double> estimate(p), std_error(p), statistic(p), p_value(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    estimate[j] = fit.coefficients(jj);
    std_error[j] = fit.sigma * std::sqrt(fit.xtx_inverse(jj, jj));
    statistic[j] = wald_statistic(estimate[j], std_error[j]);
    p_value[j] = t_two_sided_p(statistic[j], df);
  }
  std::vector<Column> cols{Column::texts("term", fit.term_names),
                           Column::floats("estimate", estimate),
                           Column::floats("std.error", std_error),
                           Column::floats("statistic", statistic),
                           Column::floats("p.value", p_value)};
  if (conf_level) {
    if (!(*conf_level > 0.0 && *conf_level < 1.0))
      throw Error(ErrorKind::Argument, "confidence level must lie in (0, 1)");
    const double q = t_quantile((1.0 + *conf_level) / 2.0, df);
    std::vector<double> low(p), high(p);
    for (std::size_t j = 0; j < p; ++j) {
      low[j] = estimate[j] - q * std_error[j];
      high[j] = estimate[j] + q * std_error[j];
    }
    cols.push_back(Column::floats("conf.low", std::move(low)));
    cols.push_back(Column::floats("conf.high", std::move(high)));
  }
  return Frame(std::move(cols));
}

/// Leverage at or above this counts as an exact leverage point.
constexpr double kUnitLeverage = 1.0 - 10.0 * std::numeric_limits<double>::epsilon();

Frame augment_lm(const LmFit& fit) {
  const auto n = fit.n;
  const double p = static_cast<double>(fit.p);
  const double dfr = static_cast<double>(fit.df_residual());
  const double s2 = fit.sigma * fit.sigma;

  std::vector<double> se_fit(n), loo_sigma(n), cooksd(n), std_resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double h = fit.hat(ii);
    const double e = fit.residuals(ii);
    se_fit[i] = fit.sigma * std::sqrt(h);
    if (h >= kUnitLeverage) {
      loo_sigma[i] = cooksd[i] = std_resid[i] = kNaN;
      continue;
    }
    const double one_minus = 1.0 - h;
    loo_sigma[i] = std::sqrt((dfr * s2 - e * e / one_minus) / (dfr - 1.0));
    cooksd[i] = e * e * h / (p * s2 * one_minus * one_minus);
    std_resid[i] = e / (fit.sigma * std::sqrt(one_minus));
  }

  std::vector<Column> cols;
  std::optional<Frame::Labels> labels;
  if (fit.source) {
    const Frame& src = *fit.source->frame;
    if (src.n_rows() != n) throw Error(ErrorKind::Argument, "source frame row count does not match fit");
    if (src.row_labels()) cols.push_back(Column::texts(".rownames", *src.row_labels()));
    std::vector<std::string> used = symbols(*fit.source->formula.response);
    for (const auto& t : fit.source->formula.terms)
      for (auto& s : symbols(*t))
        if (std::find(used.begin(), used.end(), s) == used.end()) used.push_back(s);
    for (const auto& name : used) cols.push_back(src.column(name));
  }
  cols.push_back(Column::floats(".fitted", to_std(fit.fitted)));
  cols.push_back(Column::floats(".se.fit", std::move(se_fit)));
  cols.push_back(Column::floats(".resid", to_std(fit.residuals)));
  cols.push_back(Column::floats(".hat", to_std(fit.hat)));
  cols.push_back(Column::floats(".sigma", std::move(loo_sigma)));
  cols.push_back(Column::floats(".cooksd", std::move(cooksd)));
  cols.push_back(Column::floats(".std.resid", std::move(std_resid)));
  return Frame(std::move(cols));
}

Frame glance_lm(const LmFit& fit) {
  const double n = static_cast<double>(fit.n);
  const double p = static_cast<double>(fit.p);
  const double r2 = fit.tss > 0.0 ? 1.0 - fit.rss / fit.tss : kNaN;
  const double adj = 1.0 - (1.0 - r2) * (n - 1.0) / (n - p);
  double statistic = kNaN, p_value = kNaN;
  if (fit.p >= 2 && fit.tss > 0.0) {
    statistic = ((fit.tss - fit.rss) / (p - 1.0)) / (fit.rss / (n - p));
    p_value = f_upper_tail_p(std::max(statistic, 0.0), p - 1.0, n - p);
  }
  const double log_lik = -n / 2.0 * (std::log(2.0 * std::numbers::pi) + std::log(fit.rss / n) + 1.0);
  const double aic = -2.0 * log_lik + 2.0 * (p + 1.0);
  const double bic = -2.0 * log_lik + std::log(n) * (p + 1.0);
  return Frame({Column::floats("r.squared", {r2}),
                Column::floats("adj.r.squared", {adj}),
                Column::floats("sigma", {fit.sigma}),
                Column::floats("statistic", {statistic}),
                Column::floats("p.value", {p_value}),
                Column::integers("df", {static_cast<std::int64_t>(fit.p)}),
                Column::floats("logLik", {log_lik}),
                Column::floats("AIC", {aic}),
                Column::floats("BIC", {bic}),
                Column::floats("deviance", {fit.rss}),
                Column::integers("df.residual", {static_cast<std::int64_t>(fit.df_residual())})});
}

}  // namespace tidyfit
