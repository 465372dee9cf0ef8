#include "tidyfit/reproduce.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "tidyfit/fixtures.hpp"
#include "tidyfit/formula.hpp"
#include "tidyfit/kmeans.hpp"
#include "tidyfit/linreg.hpp"
#include "tidyfit/nls.hpp"

namespace tidyfit {

namespace {

constexpr std::string_view kLmTidy = R"(term,estimate,std.error,statistic,p.value,conf.low,conf.high
(Intercept),19.746223,5.2520617,3.759709,7.650466e-04,9.0045503,30.487895
wt,-5.047982,0.4839974,-10.429771,2.518948e-11,-6.0378678,-4.058096
qsec,0.929198,0.2650173,3.506179,1.499883e-03,0.3871768,1.471219
)";

constexpr std::string_view kLmAugment = R"(.rownames,mpg,wt,qsec,.fitted,.se.fit,.resid,.hat,.sigma,.cooksd,.std.resid
Mazda RX4,21.0,2.620,16.46,21.81511,0.6832424,-0.81510855,0.06925986,2.637300,2.627038e-03,-0.32543724
Mazda RX4 Wag,21.0,2.875,17.02,21.04822,0.5468271,-0.04822401,0.04436414,2.642112,5.587076e-06,-0.01900129
Datsun 710,22.8,2.320,18.61,25.32728,0.6397681,-2.52727880,0.06072636,2.595763,2.174253e-02,-1.00443793
Hornet 4 Drive,21.4,3.215,19.44,21.58057,0.6231436,-0.18056924,0.05761138,2.641895,1.046036e-04,-0.07164647
Hornet Sportabout,18.7,3.440,17.02,18.19611,0.5120709,0.50388581,0.03890382,2.640343,5.288512e-04,0.19797699
Valiant,18.1,3.460,20.22,21.06859,0.8032106,-2.96858808,0.09571739,2.575422,5.101445e-02,-1.20244126
)";

constexpr std::string_view kLmGlance = R"(r.squared,adj.r.squared,sigma,statistic,p.value,df,logLik,AIC,BIC,deviance,df.residual
0.8264161,0.8144448,2.596175,69.03311,9.394765e-12,3,-74.36025,156.7205,162.5834,195.4636,29
)";

constexpr std::string_view kLmGrouped = R"(am,term,estimate,std.error,statistic,p.value,conf.low
0,(Intercept),11.2489412,6.7148019,1.675245,0.1133158633,-2.98580299
0,wt,-2.9962762,0.6635548,-4.515491,0.0003520832,-4.40294960
0,qsec,0.9454396,0.2945500,3.209776,0.0054642663,0.32102149
1,(Intercept),20.1753989,11.1990599,1.801526,0.1017988425,-4.77766163
1,wt,-6.7543597,1.4305934,-4.721369,0.0008147494,-9.94192037
1,qsec,1.1809718,0.4924515,2.398148,0.0374338987,0.08372136
)";

constexpr std::string_view kNlsSummary = R"(term,estimate,std.error,statistic,p.value,sigma,df.residual,iterations
k,45.829,4.249,10.786,7.64e-12,2.774,30,1
b,4.386,1.536,2.855,0.00774,2.774,30,1
)";

const std::vector<std::string> kSimulationColumns{"k", "sd", "replication", "totss", "tot.withinss", "betweenss",
                                                  "iter"};
const std::vector<double> kSimulationSds{0.5, 1.0, 2.0, 4.0};
constexpr int kSimulationReplications = 50;
constexpr int kSimulationMaxK = 9;

std::vector<std::vector<std::string>> split_table(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      cells.push_back(line.substr(start, pos - start));
    cells.push_back(line.substr(start));
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string_view golden_for(std::string_view target) {
  if (target == "lm-tidy") return kLmTidy;
  if (target == "lm-augment") return kLmAugment;
  if (target == "lm-glance") return kLmGlance;
  if (target == "lm-grouped") return kLmGrouped;
  if (target == "nls-summary") return kNlsSummary;
  return {};
}

LinearFormula mtcars_formula() { return parse_linear_formula("mpg ~ wt + qsec"); }

Frame nls_summary() {
  const auto fit = fit_nls(parse_nls_formula("mpg ~ k / wt + b", {{"k", 1.0}, {"b", 0.0}}), mtcars());
  const Frame tidy = tidy_nls(fit);
  const std::size_t q = fit.q;
  return tidy.append({Column::floats("sigma", std::vector<double>(q, fit.sigma)),
                      Column::integers("df.residual", std::vector<std::int64_t>(
                                                          q, static_cast<std::int64_t>(fit.df_residual()))),
                      Column::integers("iterations", std::vector<std::int64_t>(q, fit.iterations))});
}

Frame kmeans_simulation(std::uint64_t seed, unsigned threads) {
  const Frame points =
      simulate_clusters(simulation_centers(), kSimulationSds, kSimulationReplications, derive_seed(seed, 0));
  const std::uint64_t fit_seed = derive_seed(seed, 1);
  const Frame glances = apply_combine(
      group_by(points, {"sd", "replication"}),
      [fit_seed](const Frame& g, std::size_t index) {
        const MatrixXd x = frame_matrix(g, {"x1", "x2"});
        std::vector<Frame> rows;
        for (int k = 1; k <= kSimulationMaxK; ++k) {
          const auto fit = fit_kmeans(x, k, 5, 100, derive_seed(fit_seed, index * kSimulationMaxK + k));
          rows.push_back(glance_kmeans(fit).prepend({Column::integers("k", {k})}));
        }
        return concat(rows);
      },
      ApplyOptions{threads});
  return glances.select(kSimulationColumns);
}

std::string describe_cell(std::size_t row, std::string_view column) {
  return "row " + std::to_string(row + 1) + " column '" + std::string(column) + "'";
}

}  // namespace

const std::vector<std::string>& reproduce_targets() {
  static const std::vector<std::string> targets{"lm-tidy",    "lm-augment",  "lm-glance",
                                                "lm-grouped", "nls-summary", "kmeans-sim"};
  return targets;
}

Frame reproduce_table(std::string_view target, std::uint64_t seed, unsigned threads) {
  if (target == "lm-tidy") return tidy_lm(fit_lm(mtcars_formula(), mtcars()), 0.95);
  if (target == "lm-augment") return augment_lm(fit_lm(mtcars_formula(), mtcars()));
  if (target == "lm-glance") return glance_lm(fit_lm(mtcars_formula(), mtcars()));
  if (target == "lm-grouped") {
    const auto formula = mtcars_formula();
    return apply_combine(
        group_by(mtcars(), {"am"}), [&formula](const Frame& g) { return tidy_lm(fit_lm(formula, g), 0.95); },
        ApplyOptions{threads});
  }
  if (target == "nls-summary") return nls_summary();
  if (target == "kmeans-sim") return kmeans_simulation(seed, threads);
  throw Error(ErrorKind::Argument, "unknown reproduce target '" + std::string(target) + "'");
}

double golden_tolerance(std::string_view printed) {
  const auto value = parse_number(printed);
  if (!value) return 0.0;
  const auto e = printed.find_first_of("eE");
  const std::string_view mantissa = printed.substr(0, e);
  int exponent = 0;
  if (e != std::string_view::npos) {
    std::string_view digits = printed.substr(e + 1);
    if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
    std::from_chars(digits.data(), digits.data() + digits.size(), exponent);
  }
  const auto dot = mantissa.find('.');
  const int decimals = dot == std::string_view::npos ? 0 : static_cast<int>(mantissa.size() - dot - 1);
  const double half_unit = 0.5 * std::pow(10.0, exponent - decimals);
  return std::max(1e-4 * std::abs(*value), half_unit);
}

GoldenReport check_golden(std::string_view target, const Frame& table) {
  GoldenReport report;
  auto fail = [&report](std::string message) {
    report.ok = false;
    report.worst = std::move(message);
    report.worst_ratio = std::numeric_limits<double>::infinity();
    return report;
  };

  if (target == "kmeans-sim") {
    if (table.names() != kSimulationColumns) return fail("kmeans-sim column set differs from the expected glance schema");
    const std::size_t expected = kSimulationMaxK * kSimulationSds.size() * kSimulationReplications;
    if (table.n_rows() != expected)
      return fail("kmeans-sim has " + std::to_string(table.n_rows()) + " rows, expected " + std::to_string(expected));
    return report;
  }

  const std::string_view golden = golden_for(target);
  if (golden.empty()) throw Error(ErrorKind::Argument, "unknown reproduce target '" + std::string(target) + "'");
  const auto rows = split_table(golden);
  const auto& header = rows.front();
  if (table.n_rows() < rows.size() - 1)
    return fail("table has " + std::to_string(table.n_rows()) + " rows, expected at least " +
                std::to_string(rows.size() - 1));

  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!table.has_column(header[c])) return fail("missing column '" + header[c] + "'");
    const Column& column = table.column(header[c]);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const std::string& printed = rows[r][c];
      const std::size_t row = r - 1;
      ++report.cells_checked;
      const auto expected = parse_number(printed);
      if (column.type() == ColumnType::Text || !expected) {
        if (display_value(column.at(row)) != printed)
          return fail(describe_cell(row, header[c]) + ": got '" + display_value(column.at(row)) + "', expected '" +
                      printed + "'");
        continue;
      }
      const Value cell = column.at(row);
      const double actual = std::holds_alternative<double>(cell)         ? std::get<double>(cell)
                            : std::holds_alternative<std::int64_t>(cell) ? static_cast<double>(std::get<std::int64_t>(cell))
                                                                         : std::nan("");
      const double tolerance = column.type() == ColumnType::Integer ? 0.0 : golden_tolerance(printed);
      const double error = std::abs(actual - *expected);
      double ratio = error == 0.0 ? 0.0 : error / tolerance;
      if (std::isnan(ratio)) ratio = std::numeric_limits<double>::infinity();
      if (report.worst.empty() || ratio > report.worst_ratio) {
        report.worst_ratio = ratio;
        std::ostringstream msg;
        msg.precision(10);
        msg << describe_cell(row, header[c]) << ": got " << actual << ", expected " << printed << " (tolerance "
            << tolerance << ")";
        report.worst = msg.str();
      }
      if (ratio > 1.0) report.ok = false;
    }
  }
  return report;
}

}  // namespace tidyfit
