#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "tidyfit/cli.hpp"
#include "tidyfit/csv.hpp"
#include "tidyfit/fixtures.hpp"
#include "tidyfit/linreg.hpp"
#include "tidyfit/reproduce.hpp"

using namespace tidyfit;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args, const std::string& input = std::string(mtcars_csv())) {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run_cli(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("fit tidy output is byte-identical to the library path") {
  const Run r = run({"fit", "--model", "lm", "--formula", "mpg ~ wt + qsec", "--output", "tidy", "--conf-level",
                     "0.95", "--rownames", "model"});
  CHECK(r.code == kExitOk);
  CHECK(r.err.empty());
  const Frame expected = tidy_lm(fit_lm(parse_linear_formula("mpg ~ wt + qsec"), mtcars()), 0.95);
  CHECK(r.out == write_csv(expected));
  CHECK(r.out.find("9.0045503") != std::string::npos);
}

TEST_CASE("grouped fit gives six rows led by the key") {
  const Run r = run({"fit", "--model", "lm", "--formula", "mpg ~ wt + qsec", "--group-by", "am", "-"});
  CHECK(r.code == kExitOk);
  CHECK(lines(r.out) == 7);
  CHECK(r.out.rfind("am,term,estimate", 0) == 0);
}

TEST_CASE("bootstrap nls gives 1000 rows and is reproducible") {
  const std::vector<std::string> args{"fit", "--model", "nls", "--formula", "mpg ~ k/wt + b", "--start", "k=1,b=0",
                                      "--boot", "500", "--seed", "2014", "--output", "tidy"};
  const Run a = run(args), b = run(args);
  REQUIRE(a.code == kExitOk);
  CHECK(lines(a.out) == 1001);
  CHECK(a.out.rfind("replicate,term,", 0) == 0);
  CHECK(a.out == b.out);

  const Run bands = run({"summarize", "--group-by", "term", "--agg", "conf.low=quantile(estimate,0.025)", "--agg",
                         "conf.high=quantile(estimate,0.975)"},
                        a.out);
  CHECK(bands.code == kExitOk);
  const Frame t = read_csv(bands.out);
  CHECK(t.names() == std::vector<std::string>{"term", "conf.low", "conf.high"});
  CHECK(t.column("conf.low").as_doubles()[1] < 45.829);
  CHECK(t.column("conf.high").as_doubles()[1] > 45.829);
}

TEST_CASE("thread cap does not change results") {
  const std::vector<std::string> args{"fit", "--model", "kmeans", "--columns", "mpg,wt", "--k", "2", "--boot", "40",
                                      "--output", "glance"};
  ::setenv("TIDYFIT_THREADS", "1", 1);
  const Run one = run(args);
  ::setenv("TIDYFIT_THREADS", "4", 1);
  const Run four = run(args);
  ::setenv("TIDYFIT_THREADS", "zero", 1);
  const Run bad = run(args);
  ::unsetenv("TIDYFIT_THREADS");
  CHECK(one.code == kExitOk);
  CHECK(one.out == four.out);
  CHECK(bad.code == kExitUsage);
}

TEST_CASE("summarize") {
  const Run median = run({"summarize", "--agg", "m=median(x)"}, "x\n1\n3\n2\n");
  CHECK(median.code == kExitOk);
  CHECK(median.out == "m\n2.0\n");
  const Run minimum = run({"summarize", "--group-by", "g", "--agg", "lo=quantile(x,0)"}, "g,x\na,5\na,4\nb,9\n");
  CHECK(minimum.out == "g,lo\na,4.0\nb,9.0\n");
  CHECK(run({"summarize", "--agg", "m=median(nope)"}, "x\n1\n").code == kExitUsage);
  CHECK(run({"summarize", "--agg", "garbage"}, "x\n1\n").code == kExitUsage);
}

TEST_CASE("inflate") {
  const Run r = run({"inflate", "--grid", "fruit=apple,orange,banana", "--grid", "vehicle=car,boat"},
                    "size\nsmall\nbig\n");
  CHECK(r.code == kExitOk);
  CHECK(lines(r.out) == 13);
  CHECK(r.out.rfind("fruit,vehicle,size\napple,car,small\napple,car,big\napple,boat,small", 0) == 0);
  const Run same = run({"inflate", "--grid", "only=1"}, "a\n1\n2\n");
  CHECK(lines(same.out) == 3);
  const Run range = run({"inflate", "--grid", "sd=.5,1,2,4", "--grid", "replication=1..50"},
                        "oracle,x1\n1,5\n2,0\n3,-3\n");
  CHECK(lines(range.out) == 601);
  CHECK(run({"inflate", "--grid", "a=1,2"}, "a\n1\n").code == kExitUsage);
  CHECK(run({"inflate", "--grid", "b="}, "a\n1\n").code == kExitUsage);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"fit", "--model", "lm"}).code == kExitUsage);
  CHECK(run({"fit", "--model", "lm", "--formula", "mpg ~ nope"}).code == kExitUsage);
  CHECK(run({"fit", "--model", "lm", "--formula", "mpg ~ (wt"}).code == kExitUsage);
  CHECK(run({"fit", "--model", "lm", "--formula", "mpg ~ ns(wt, 3)"}).code == kExitUsage);

  const Run fail = run({"fit", "--model", "lm", "--formula", "mpg ~ wt + w2", "--group-by", "g"},
                       "g,mpg,wt,w2\na,1,1,2\na,2,2,4\na,4,3,6\nb,1,1,1\nb,3,2,5\nb,2,3,2\n");
  CHECK(fail.code == kExitFit);
  CHECK(fail.err.find("g=a") != std::string::npos);
  CHECK(run({"fit", "--model", "nls", "--formula", "mpg ~ k * b / wt", "--start", "k=1,b=1"}).code == kExitFit);

  CHECK(run({"reproduce", "lm-augment", "--check"}).code == kExitOk);
  CHECK(run({"reproduce", "no-such-target"}).code == kExitUsage);

  CHECK_FALSE(check_golden("lm-glance", Frame({Column::floats("r.squared", {0.5})})).ok);
  CHECK(exit_code_for(Error(ErrorKind::Convergence, "x")) == kExitFit);
  CHECK(exit_code_for(Error(ErrorKind::Schema, "x")) == kExitUsage);
}

TEST_CASE("golden checks accept the computed tables and reject perturbations") {
  for (const auto& target : reproduce_targets()) {
    const GoldenReport report = check_golden(target, reproduce_table(target));
    CHECK_MESSAGE(report.ok, target << ": " << report.worst);
  }
  const Frame tidy = reproduce_table("lm-tidy");
  std::vector<Column> cols;
  for (std::size_t j = 0; j < tidy.n_cols(); ++j) {
    if (tidy.names()[j] != "estimate") {
      cols.push_back(tidy.column(j));
      continue;
    }
    auto v = tidy.column(j).as_doubles();
    v[1] *= 1.001;
    cols.push_back(Column::floats("estimate", v));
  }
  CHECK_FALSE(check_golden("lm-tidy", Frame(cols)).ok);
  CHECK(golden_tolerance("1.536") == doctest::Approx(5e-4));
  CHECK(golden_tolerance("45.829") == doctest::Approx(45.829e-4));
}

TEST_CASE("jsonl output") {
  const Run r = run({"fit", "--model", "spearman", "--x", "mpg", "--y", "wt", "--format", "jsonl"});
  CHECK(r.code == kExitOk);
  CHECK(lines(r.out) == 1);
  CHECK(r.out.find("\"method\":\"spearman\"") != std::string::npos);
}
