#include "tidyfit/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <thread>

#include "tidyfit/assoc.hpp"
#include "tidyfit/csv.hpp"
#include "tidyfit/formula.hpp"
#include "tidyfit/frame.hpp"
#include "tidyfit/kmeans.hpp"
#include "tidyfit/linreg.hpp"
#include "tidyfit/nls.hpp"
#include "tidyfit/reproduce.hpp"
#include "tidyfit/rng.hpp"

namespace tidyfit {

namespace {

struct IoOptions {
  std::string input = "-";
  std::string rownames;
  std::string delimiter = ",";
  std::string format = "csv";
};

struct FitRequest {
  std::string model;
  std::string formula;
  std::string start;
  int k = 0;
  int nstart = 5;
  int max_iter = 100;
  std::string x, y;
  std::string columns;
  std::string group_by;
  std::string output = "tidy";
  std::optional<double> conf_level;
  std::optional<std::size_t> boot;
  std::uint64_t seed = 2014;
};

/// Parsed and checked form of a FitRequest, built before any data is read.
struct FitPlan {
  FitRequest request;
  std::optional<LinearFormula> linear;
  std::optional<NlsFormula> nonlinear;
  std::vector<std::string> columns;
  std::vector<std::string> keys;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text, char sep = ',') {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (const auto& item : out)
    if (item.empty()) throw Error(ErrorKind::Argument, "empty item in list '" + std::string(text) + "'");
  return out;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

StartValues parse_start(std::string_view text) {
  StartValues out;
  for (const auto& item : split_list(text)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Argument, "start value '" + item + "' is not name=value");
    const std::string name = trim(std::string_view(item).substr(0, eq));
    const auto value = parse_double(trim(std::string_view(item).substr(eq + 1)));
    if (name.empty() || !value) throw Error(ErrorKind::Argument, "start value '" + item + "' is not name=value");
    out.emplace_back(name, *value);
  }
  if (out.empty()) throw Error(ErrorKind::Argument, "--start needs at least one name=value");
  return out;
}

Value parse_scalar(const std::string& token) {
  if (const auto i = parse_int(token)) return *i;
  if (const auto d = parse_double(token)) return *d;
  return token;
}

/// "name=v1,v2,..." where an item "a..b" expands to the integers a through b.
GridEntry parse_grid(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw Error(ErrorKind::Argument, "grid '" + std::string(text) + "' is not name=values");
  GridEntry entry{trim(text.substr(0, eq)), {}};
  if (entry.first.empty()) throw Error(ErrorKind::Argument, "grid '" + std::string(text) + "' has no name");
  for (const auto& item : split_list(text.substr(eq + 1))) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const auto lo = parse_int(item.substr(0, dots));
      const auto hi = parse_int(item.substr(dots + 2));
      if (lo && hi) {
        if (*lo > *hi) throw Error(ErrorKind::Argument, "empty range '" + item + "'");
        for (auto v = *lo; v <= *hi; ++v) entry.second.emplace_back(v);
        continue;
      }
    }
    entry.second.push_back(parse_scalar(item));
  }
  return entry;
}

/// "out=fn(column[, p])"; fn is quantile, median, mean, sum, max or count.
AggregateSpec parse_aggregate(const std::string& text) {
  static const std::regex pattern(R"(^\s*([^=\s]+)\s*=\s*(\w+)\s*\(\s*([^,\)\s]*)\s*(?:,\s*([^\)\s]+)\s*)?\)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern))
    throw Error(ErrorKind::Argument, "aggregate '" + text + "' is not out=fn(column[, p])");
  AggregateSpec spec{m[1], m[3], Reducer::count()};
  const std::string fn = m[2];
  const bool has_p = m[4].matched;
  if (fn == "quantile") {
    const auto p = has_p ? parse_double(m[4].str()) : std::nullopt;
    if (!p) throw Error(ErrorKind::Argument, "quantile needs a probability: '" + text + "'");
    spec.reducer = Reducer::quantile(*p);
  } else if (fn == "median") {
    spec.reducer = Reducer::median();
  } else if (fn == "mean") {
    spec.reducer = Reducer::mean();
  } else if (fn == "sum") {
    spec.reducer = Reducer::sum();
  } else if (fn == "max") {
    spec.reducer = Reducer::max();
  } else if (fn == "count") {
    spec.reducer = Reducer::count();
  } else {
    throw Error(ErrorKind::Argument, "unknown reducer '" + fn + "'");
  }
  if (fn != "quantile" && has_p) throw Error(ErrorKind::Argument, fn + " takes a single column: '" + text + "'");
  if (fn != "count" && spec.input.empty()) throw Error(ErrorKind::Argument, fn + " needs a column: '" + text + "'");
  return spec;
}

unsigned thread_budget() {
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TIDYFIT_THREADS")) {
    const auto cap = parse_int(env);
    if (!cap || *cap < 1) throw Error(ErrorKind::Argument, "TIDYFIT_THREADS must be a positive integer");
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::int64_t>(*cap, 1024)));
  }
  return threads;
}

Frame read_input(const IoOptions& io, std::istream& in) {
  if (io.delimiter.size() != 1) throw Error(ErrorKind::Argument, "--delimiter must be a single character");
  CsvOptions options;
  options.delimiter = io.delimiter.front();
  if (!io.rownames.empty()) options.rowname_column = io.rownames;
  if (io.input == "-") return read_csv(in, options);
  std::ifstream file(io.input, std::ios::binary);
  if (!file) throw Error(ErrorKind::Argument, "cannot open '" + io.input + "'");
  return read_csv(file, options);
}

void emit(const Frame& frame, const IoOptions& io, std::ostream& out) {
  out << (io.format == "jsonl" ? write_jsonl(frame) : write_csv(frame, true));
}

FitPlan plan_fit(const FitRequest& request) {
  FitPlan plan{request, std::nullopt, std::nullopt, {}, split_list(request.group_by)};
  const std::string& model = request.model;
  const bool correlation = model == "spearman" || model == "pearson";
  if (model == "lm" || model == "nls") {
    if (request.formula.empty()) throw Error(ErrorKind::Argument, model + " needs --formula");
  } else if (!request.formula.empty()) {
    throw Error(ErrorKind::Argument, "--formula is not used by " + model);
  }
  if (model != "nls" && !request.start.empty()) throw Error(ErrorKind::Argument, "--start is only used by nls");
  if (model == "lm") plan.linear = parse_linear_formula(request.formula);
  if (model == "nls") {
    if (request.start.empty()) throw Error(ErrorKind::Argument, "nls needs --start");
    plan.nonlinear = parse_nls_formula(request.formula, parse_start(request.start));
  }
  if (model == "kmeans") {
    if (request.k < 1) throw Error(ErrorKind::Argument, "kmeans needs --k of at least 1");
    if (request.nstart < 1) throw Error(ErrorKind::Argument, "--nstart must be at least 1");
    if (request.max_iter < 1) throw Error(ErrorKind::Argument, "--max-iter must be at least 1");
    plan.columns = split_list(request.columns);
  }
  if (correlation) {
    if (request.x.empty() || request.y.empty()) throw Error(ErrorKind::Argument, model + " needs --x and --y");
    if (request.output == "augment") throw Error(ErrorKind::Unsupported, "unsupported: augment for a correlation test");
  }
  if (request.conf_level) {
    if (model != "lm") throw Error(ErrorKind::Argument, "--conf-level is only available for lm");
    if (!(*request.conf_level > 0.0 && *request.conf_level < 1.0))
      throw Error(ErrorKind::Argument, "--conf-level must lie strictly between 0 and 1");
  }
  if (request.boot && *request.boot < 1) throw Error(ErrorKind::Argument, "--boot must be at least 1");
  return plan;
}

/// Fits one (group or replicate) frame and applies the selected tidier.
Frame fit_and_tidy(const FitPlan& plan, const Frame& data, std::uint64_t seed) {
  const auto& req = plan.request;
  if (req.model == "lm") {
    const LmFit fit = fit_lm(*plan.linear, data);
    if (req.output == "augment") return augment_lm(fit);
    if (req.output == "glance") return glance_lm(fit);
    return tidy_lm(fit, req.conf_level);
  }
  if (req.model == "nls") {
    const NlsFit fit = fit_nls(*plan.nonlinear, data);
    if (req.output == "augment") return augment_nls(fit, data);
    if (req.output == "glance") return glance_nls(fit);
    return tidy_nls(fit);
  }
  if (req.model == "kmeans") {
    std::vector<std::string> columns = plan.columns;
    if (columns.empty())
      for (const auto& c : data.columns())
        if (c.is_numeric() && std::find(plan.keys.begin(), plan.keys.end(), c.name()) == plan.keys.end() &&
            c.name() != "replicate")
          columns.push_back(c.name());
    if (columns.empty()) throw Error(ErrorKind::Schema, "no numeric columns to cluster");
    const KmeansFit fit = fit_kmeans(frame_matrix(data, columns), req.k, req.nstart, req.max_iter, seed);
    if (req.output == "augment") return augment_kmeans(fit, data);
    if (req.output == "glance") return glance_kmeans(fit);
    return tidy_kmeans(fit, columns);
  }
  const auto x = data.column(req.x).as_doubles();
  const auto y = data.column(req.y).as_doubles();
  return tidy_htest(req.model == "spearman" ? spearman_test(x, y) : pearson_test(x, y));
}

Frame run_fit(const FitPlan& plan, const Frame& data, unsigned threads) {
  const auto& req = plan.request;
  const GroupedFrame groups = group_by(data, plan.keys);
  if (!req.boot) {
    return apply_combine(
        groups, [&](const Frame& g, std::size_t index) { return fit_and_tidy(plan, g, derive_seed(req.seed, index)); },
        ApplyOptions{threads});
  }
  return apply_combine(groups, [&](const Frame& g, std::size_t index) {
    const std::uint64_t group_seed = derive_seed(req.seed, index);
    const GroupedFrame replicates = bootstrap_replicates(g, *req.boot, group_seed);
    return apply_combine(
        replicates,
        [&](const Frame& r, std::size_t b) {
          return fit_and_tidy(plan, r.drop(std::vector<std::string>{"replicate"}), derive_seed(group_seed, b + 1));
        },
        ApplyOptions{threads});
  });
}

void add_io_options(CLI::App& cmd, IoOptions& io) {
  cmd.add_option("input,--input", io.input, "Input CSV (\"-\" for stdin)");
  cmd.add_option("--rownames", io.rownames, "Column holding row labels");
  cmd.add_option("--delimiter", io.delimiter, "Input field delimiter");
  cmd.add_option("--format", io.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
}

}  // namespace

int exit_code_for(const Error& error) {
  if (error.is_fit_failure() || error.kind() == ErrorKind::Internal) return kExitFit;
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fit models on tidy tables and emit tidy, augment and glance outputs", "tidyfit"};
  app.require_subcommand(1);

  IoOptions io;
  FitRequest request;
  auto* fit = app.add_subcommand("fit", "Fit a model, optionally per group or bootstrap replicate");
  add_io_options(*fit, io);
  fit->add_option("--model", request.model, "Model")
      ->required()
      ->check(CLI::IsMember({"lm", "nls", "kmeans", "spearman", "pearson"}));
  fit->add_option("--formula", request.formula, "Model formula, e.g. \"mpg ~ wt + qsec\"");
  fit->add_option("--start", request.start, "NLS start values, e.g. k=1,b=0");
  fit->add_option("--k", request.k, "Number of clusters");
  fit->add_option("--nstart", request.nstart, "Random starts for k-means")->capture_default_str();
  fit->add_option("--max-iter", request.max_iter, "Lloyd iteration cap")->capture_default_str();
  fit->add_option("--columns", request.columns, "Comma-separated columns to cluster");
  fit->add_option("--x", request.x, "First correlation column");
  fit->add_option("--y", request.y, "Second correlation column");
  fit->add_option("--group-by", request.group_by, "Comma-separated grouping columns");
  fit->add_option("--output", request.output, "Tidier")
      ->check(CLI::IsMember({"tidy", "augment", "glance"}))
      ->capture_default_str();
  fit->add_option("--conf-level", request.conf_level, "Add conf.low/conf.high at this level (lm)");
  fit->add_option("--boot", request.boot, "Bootstrap replicates per group");
  fit->add_option("--seed", request.seed, "Random seed")->capture_default_str();

  std::string summarize_keys;
  std::vector<std::string> aggregates;
  auto* summarize = app.add_subcommand("summarize", "Grouped quantiles and other reductions");
  add_io_options(*summarize, io);
  summarize->add_option("--group-by", summarize_keys, "Comma-separated grouping columns");
  summarize->add_option("--agg", aggregates, "out=fn(column[, p]); repeatable")->required()->allow_extra_args(false);

  std::vector<std::string> grids;
  auto* inflate_cmd = app.add_subcommand("inflate", "Factorial expansion of a table");
  add_io_options(*inflate_cmd, io);
  inflate_cmd->add_option("--grid", grids, "name=v1,v2,... or name=a..b; repeatable")->required()->allow_extra_args(false);

  std::string target;
  bool check = false;
  std::uint64_t reproduce_seed = 2014;
  auto* reproduce = app.add_subcommand("reproduce", "Regenerate a reference table");
  reproduce->add_option("target", target, "Table to regenerate")->required()->check(CLI::IsMember(reproduce_targets()));
  reproduce->add_flag("--check", check, "Compare against the bundled reference values");
  reproduce->add_option("--seed", reproduce_seed, "Random seed (kmeans-sim)")->capture_default_str();
  reproduce->add_option("--format", io.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const unsigned threads = thread_budget();
    if (fit->parsed()) {
      const FitPlan plan = plan_fit(request);
      emit(run_fit(plan, read_input(io, in), threads), io, out);
    } else if (summarize->parsed()) {
      std::vector<AggregateSpec> specs;
      for (const auto& a : aggregates) specs.push_back(parse_aggregate(a));
      const auto keys = split_list(summarize_keys);
      emit(aggregate(group_by(read_input(io, in), keys), specs), io, out);
    } else if (inflate_cmd->parsed()) {
      std::vector<GridEntry> entries;
      for (const auto& g : grids) entries.push_back(parse_grid(g));
      emit(inflate(read_input(io, in), entries).base(), io, out);
    } else if (reproduce->parsed()) {
      const Frame table = reproduce_table(target, reproduce_seed, threads);
      emit(table, io, out);
      if (check) {
        const GoldenReport report = check_golden(target, table);
        if (!report.ok) {
          err << "tidyfit: golden mismatch in " << target << ": " << report.worst << "\n";
          return kExitGolden;
        }
        if (report.cells_checked == 0)
          err << "tidyfit: " << target << " has the expected columns and row count\n";
        else
          err << "tidyfit: " << target << " matches " << report.cells_checked
              << " reference cells (closest to tolerance: " << report.worst << ")\n";
      }
    }
  } catch (const Error& e) {
    err << "tidyfit: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "tidyfit: internal error: " << e.what() << "\n";
    return kExitFit;
  }
  return kExitOk;
}

}  // namespace tidyfit
