#pragma once

#include <span>
#include <string>
#include <vector>

#include "tidyfit/frame.hpp"

namespace tidyfit {

struct CorTestResult {
  std::string method;
  double estimate = 0.0;
  double statistic = 0.0;  // t for Pearson, S for Spearman
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

/// Spearman's rho with the asymptotic t approximation for the p-value.
CorTestResult spearman_test(std::span<const double> x, std::span<const double> y);

CorTestResult pearson_test(std::span<const double> x, std::span<const double> y);

/// estimate, statistic, p.value, method
Frame tidy_htest(const CorTestResult& result);

}  // namespace tidyfit
