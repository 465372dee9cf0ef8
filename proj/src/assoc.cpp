#include "tidyfit/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tidyfit/dist.hpp"

namespace tidyfit {

namespace {

void check_inputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::Argument, "x and y differ in length");
  if (x.size() < 3) throw Error(ErrorKind::Argument, "correlation test needs at least 3 observations");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw Error(ErrorKind::Argument, "correlation input contains non-finite values");
}

/// Sample correlation; errors when either side has zero variance.
double correlation(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::Argument, "degenerate input: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double correlation_p(double r, std::size_t n) {
  if (std::abs(r) == 1.0) return 0.0;
  const double df = static_cast<double>(n) - 2.0;
  return t_two_sided_p(r * std::sqrt(df / (1.0 - r * r)), df);
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

CorTestResult spearman_test(std::span<const double> x, std::span<const double> y) {
  check_inputs(x, y);
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  CorTestResult out;
  out.method = "spearman";
  out.n = x.size();
  out.estimate = correlation(rx, ry);
  const double n = static_cast<double>(out.n);
  out.statistic = (1.0 - out.estimate) * n * (n * n - 1.0) / 6.0;
  out.p_value = correlation_p(out.estimate, out.n);
  return out;
}

CorTestResult pearson_test(std::span<const double> x, std::span<const double> y) {
  check_inputs(x, y);
  CorTestResult out;
  out.method = "pearson";
  out.n = x.size();
  out.estimate = correlation(x, y);
  const double df = static_cast<double>(out.n) - 2.0;
  const double r = out.estimate;
  out.statistic = std::abs(r) == 1.0 ? std::copysign(std::numeric_limits<double>::infinity(), r)
                                     : r * std::sqrt(df / (1.0 - r * r));
  out.p_value = correlation_p(r, out.n);
  return out;
}

Frame tidy_htest(const CorTestResult& result) {
  return Frame({Column::floats("estimate", {result.estimate}), Column::floats("statistic", {result.statistic}),
                Column::floats("p.value", {result.p_value}), Column::texts("method", {result.method})});
}

}  // namespace tidyfit
