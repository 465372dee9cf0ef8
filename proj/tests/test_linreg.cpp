#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "tidyfit/fixtures.hpp"
#include "tidyfit/linreg.hpp"

using namespace tidyfit;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Internal;
}

LmFit mtcars_fit() { return fit_lm(parse_linear_formula("mpg ~ wt + qsec"), mtcars()); }

double cell(const Frame& f, std::string_view column, std::size_t row) { return f.column(column).as_doubles()[row]; }

struct Problem {
  MatrixXd x;
  VectorXd y;
};

Problem random_problem(std::mt19937_64& gen, Eigen::Index n, Eigen::Index p) {
  std::normal_distribution<double> normal;
  Problem out{MatrixXd(n, p), VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) out.x(i, j) = normal(gen) * (1.0 + static_cast<double>(j));
    out.y(i) = normal(gen) * 3.0;
  }
  return out;
}

std::vector<std::string> names_for(Eigen::Index p) {
  std::vector<std::string> names{"(Intercept)"};
  for (Eigen::Index j = 1; j < p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

}  // namespace

TEST_CASE("mtcars coefficients") {
  const LmFit fit = mtcars_fit();
  CHECK(fit.term_names == std::vector<std::string>{"(Intercept)", "wt", "qsec"});
  CHECK(fit.coefficients(0) == doctest::Approx(19.746223).epsilon(1e-6));
  CHECK(fit.coefficients(1) == doctest::Approx(-5.047982).epsilon(1e-6));
  CHECK(fit.coefficients(2) == doctest::Approx(0.929198).epsilon(1e-6));
  CHECK(fit.df_residual() == 29);
}

TEST_CASE("perfect fit") {
  MatrixXd x(4, 2);
  x << 1, 1, 1, 2, 1, 3, 1, 4;
  VectorXd y(4);
  y << 2, 4, 6, 8;
  const LmFit fit = fit_ols(x, y, {"(Intercept)", "x"});
  CHECK(std::abs(fit.coefficients(0)) < 1e-12);
  CHECK(fit.coefficients(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.rss < 1e-24);
  CHECK(fit.sigma < 1e-12);

  // exact zeros give the signed-infinity policy
  CHECK(wald_statistic(2.0, 0.0) == std::numeric_limits<double>::infinity());
  CHECK(wald_statistic(-2.0, 0.0) == -std::numeric_limits<double>::infinity());
  const Frame exact({Column::floats("x", {1, 2, 3, 4}), Column::floats("y", {2, 4, 6, 8})});
  const LmFit ef = fit_lm(parse_linear_formula("y ~ x"), exact);
  const Frame glance = glance_lm(ef);
  CHECK(cell(glance, "r.squared", 0) == doctest::Approx(1.0));
  CHECK(cell(glance, "deviance", 0) < 1e-20);
}

TEST_CASE("fit errors") {
  MatrixXd x(4, 3);
  x << 1, 1, 1, 1, 2, 2, 1, 3, 3, 1, 5, 5;
  VectorXd y(4);
  y << 1, 2, 3, 4;
  try {
    (void)fit_ols(x, y, {"(Intercept)", "a", "a_copy"});
    FAIL("expected singular design");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularDesign);
    CHECK(std::string(e.what()).find("a_copy") != std::string::npos);
  }
  CHECK(kind_of([&] { (void)fit_ols(x.topRows(3), y.head(3), {"(Intercept)", "a", "b"}); }) ==
        ErrorKind::InsufficientData);
}

TEST_CASE("tidy without and with intervals") {
  const LmFit fit = mtcars_fit();
  const Frame t = tidy_lm(fit);
  CHECK(t.names() == std::vector<std::string>{"term", "estimate", "std.error", "statistic", "p.value"});
  CHECK(cell(t, "std.error", 1) == doctest::Approx(0.4839974).epsilon(1e-6));
  CHECK(cell(t, "statistic", 1) == doctest::Approx(-10.429771).epsilon(1e-6));
  CHECK(cell(t, "p.value", 1) == doctest::Approx(2.518948e-11).epsilon(1e-6));
  const Frame ci = tidy_lm(fit, 0.95);
  CHECK(ci.names().back() == "conf.high");
  CHECK(cell(ci, "conf.low", 1) == doctest::Approx(-6.0378678).epsilon(1e-6));
  CHECK(cell(ci, "conf.high", 1) == doctest::Approx(-4.058096).epsilon(1e-6));
}

TEST_CASE("augment carries row names and raw columns") {
  const Frame a = augment_lm(mtcars_fit());
  CHECK(a.names() == std::vector<std::string>{".rownames", "mpg", "wt", "qsec", ".fitted", ".se.fit", ".resid", ".hat",
                                              ".sigma", ".cooksd", ".std.resid"});
  CHECK(a.n_rows() == 32);
  CHECK(a.column(".rownames").values<std::string>()[0] == "Mazda RX4");
  CHECK(cell(a, ".cooksd", 0) == doctest::Approx(2.627038e-03).epsilon(1e-6));
  CHECK(cell(a, ".sigma", 0) == doctest::Approx(2.637300).epsilon(1e-6));

  const Frame plain({Column::floats("x", {1, 2, 3, 4, 5}), Column::floats("y", {1.1, 1.9, 3.2, 3.9, 5.3})});
  const Frame b = augment_lm(fit_lm(parse_linear_formula("y ~ log(x)"), plain));
  CHECK(b.names().front() == "y");
  CHECK(b.names()[1] == "x");
}

TEST_CASE("augment emits NaN diagnostics at an exact leverage point") {
  MatrixXd x(5, 3);
  x << 1, 0, 0, 1, 1, 0, 1, 2, 0, 1, 3, 0, 1, 0, 1;  // only the last row has b != 0
  VectorXd y(5);
  y << 1, 2, 2.5, 4, 7;
  const LmFit fit = fit_ols(x, y, {"(Intercept)", "a", "b"});
  CHECK(fit.hat(4) == doctest::Approx(1.0).epsilon(1e-14));
  const Frame a = augment_lm(fit);
  CHECK(std::isnan(cell(a, ".sigma", 4)));
  CHECK(std::isnan(cell(a, ".cooksd", 4)));
  CHECK(std::isnan(cell(a, ".std.resid", 4)));
  CHECK(std::isfinite(cell(a, ".sigma", 0)));
}

TEST_CASE("glance of the mtcars fit") {
  const Frame g = glance_lm(mtcars_fit());
  CHECK(g.names() == std::vector<std::string>{"r.squared", "adj.r.squared", "sigma", "statistic", "p.value", "df",
                                              "logLik", "AIC", "BIC", "deviance", "df.residual"});
  CHECK(g.column("df").type() == ColumnType::Integer);
  CHECK(g.column("df.residual").values<std::int64_t>()[0] == 29);
  CHECK(cell(g, "r.squared", 0) == doctest::Approx(0.8264161).epsilon(1e-6));
  CHECK(cell(g, "AIC", 0) == doctest::Approx(156.7205).epsilon(1e-6));
}

TEST_CASE("constant response gives NaN r.squared") {
  const Frame f({Column::floats("x", {1, 2, 3, 4}), Column::floats("y", {5, 5, 5, 5})});
  const Frame g = glance_lm(fit_lm(parse_linear_formula("y ~ x"), f));
  CHECK(std::isnan(cell(g, "r.squared", 0)));
  CHECK(std::isnan(cell(g, "statistic", 0)));
}

TEST_CASE("property: invariants over random problems") {
  std::mt19937_64 gen(20);
  for (int trial = 0; trial < 150; ++trial) {
    const Eigen::Index n = 6 + static_cast<Eigen::Index>(gen() % 40);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(gen() % std::min<Eigen::Index>(5, n - 2));
    const auto [x, y] = random_problem(gen, n, p);
    const LmFit fit = fit_ols(x, y, names_for(p));

    // fitted + residuals = y
    CHECK(((fit.fitted + fit.residuals) - y).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, y.cwiseAbs().maxCoeff()));
    // hat trace and bounds
    CHECK(std::abs(fit.hat.sum() - static_cast<double>(p)) <= 1e-8);
    for (Eigen::Index i = 0; i < n; ++i) {
      CHECK(fit.hat(i) >= 1.0 / static_cast<double>(n) - 1e-12);
      CHECK(fit.hat(i) <= 1.0 + 1e-12);
    }
    // residual orthogonality
    CHECK((x.transpose() * fit.residuals).cwiseAbs().maxCoeff() <= 1e-8 * y.norm());

    const Frame g = glance_lm(fit);
    const double r2 = cell(g, "r.squared", 0);
    if (p >= 2) {
      CHECK(r2 >= 0.0);
      CHECK(r2 <= 1.0);
      CHECK(cell(g, "adj.r.squared", 0) <= r2);
    }
    const double k = static_cast<double>(p + 1);
    CHECK(cell(g, "AIC", 0) - cell(g, "BIC", 0) ==
          doctest::Approx((2.0 - std::log(static_cast<double>(n))) * k).epsilon(1e-12));

    const Frame t = tidy_lm(fit);
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto r = static_cast<std::size_t>(j);
      CHECK(cell(t, "statistic", r) * cell(t, "std.error", r) ==
            doctest::Approx(cell(t, "estimate", r)).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: QR matches extended-precision normal equations on 8x3 problems") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [x, y] = random_problem(gen, 8, 3);
    const LmFit fit = fit_ols(x, y, names_for(3));
    const auto reference = oracle::normal_equations(x, y);
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(oracle::close(fit.coefficients(j), reference[static_cast<std::size_t>(j)], 1e-8, 1e-12));
    const MatrixXd inv = oracle::xtx_inverse(x);
    CHECK((fit.xtx_inverse - inv).cwiseAbs().maxCoeff() <= 1e-8 * inv.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("leave-one-out oracle for .cooksd and .sigma on mtcars") {
  const LmFit fit = mtcars_fit();
  const auto dm = design_matrix(parse_linear_formula("mpg ~ wt + qsec"), mtcars());
  const auto loo = oracle::leave_one_out(dm.x, dm.y);
  const Frame a = augment_lm(fit);
  for (std::size_t i = 0; i < 32; ++i) {
    CHECK(oracle::close(cell(a, ".cooksd", i), loo.cooksd[i], 1e-8));
    CHECK(oracle::close(cell(a, ".sigma", i), loo.sigma[i], 1e-8));
  }
}
