#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "tidyfit/frame.hpp"
#include "tidyfit/rng.hpp"

namespace tidyfit {

namespace {

struct KeyLess {
  bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const int c = compare_values(a[i], b[i]);
      if (c != 0) return c < 0;
    }
    return false;
  }
};

}  // namespace

GroupedFrame::GroupedFrame(Frame base, std::vector<std::string> keys, std::vector<Group> groups)
    : base_(std::move(base)), keys_(std::move(keys)), groups_(std::move(groups)) {}

Frame GroupedFrame::group_frame(std::size_t index) const {
  return base_.take(groups_.at(index).rows);
}

std::string GroupedFrame::describe_group(std::size_t index) const {
  const auto& g = groups_.at(index);
  std::string out = "group " + std::to_string(index + 1);
  if (keys_.empty()) return out;
  out += " (";
  for (std::size_t k = 0; k < keys_.size(); ++k) {
    if (k) out += ", ";
    out += keys_[k] + "=" + display_value(g.keys[k]);
  }
  return out + ")";
}

GroupedFrame group_by(const Frame& frame, std::vector<std::string> keys) {
  std::vector<const Column*> cols;
  for (const auto& k : keys) cols.push_back(&frame.column(k));

  std::map<std::vector<Value>, std::vector<std::size_t>, KeyLess> buckets;
  for (std::size_t r = 0; r < frame.n_rows(); ++r) {
    std::vector<Value> key;
    key.reserve(cols.size());
    for (const auto* c : cols) key.push_back(c->at(r));
    buckets[std::move(key)].push_back(r);
  }
  if (keys.empty() && frame.n_rows() == 0) buckets[{}];

  std::vector<Group> groups;
  groups.reserve(buckets.size());
  for (auto& [key, rows] : buckets) groups.push_back({key, std::move(rows)});
  return GroupedFrame(frame, std::move(keys), std::move(groups));
}

Frame apply_combine(const GroupedFrame& grouped, const FrameFn& fn, ApplyOptions options) {
  return apply_combine(grouped, IndexedFrameFn([&fn](const Frame& f, std::size_t) { return fn(f); }), options);
}

Frame apply_combine(const GroupedFrame& grouped, const IndexedFrameFn& fn, ApplyOptions options) {
  const std::size_t n_groups = grouped.size();
  std::vector<Frame> results(n_groups);
  std::vector<std::exception_ptr> failures(n_groups);

  auto run = [&](std::size_t g) {
    try {
      results[g] = fn(grouped.group_frame(g), g);
    } catch (...) {
      failures[g] = std::current_exception();
    }
  };

  const unsigned workers = std::min<std::size_t>(std::max(1u, options.threads), n_groups);
  if (workers <= 1) {
    for (std::size_t g = 0; g < n_groups; ++g) {
      run(g);
      if (failures[g]) break;
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t g = next++; g < n_groups; g = next++) run(g);
      });
  }

  for (std::size_t g = 0; g < n_groups; ++g) {
    if (!failures[g]) continue;
    try {
      std::rethrow_exception(failures[g]);
    } catch (const Error& e) {
      throw Error(e.kind(), grouped.describe_group(g) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Internal, grouped.describe_group(g) + ": " + e.what());
    }
  }

  const auto& keys = grouped.keys();
  std::vector<Frame> pieces;
  pieces.reserve(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    Frame out = results[g].drop(keys);
    std::vector<Column> key_cols;
    for (std::size_t k = 0; k < keys.size(); ++k)
      key_cols.push_back(Column::constant(keys[k], grouped.groups()[g].keys[k], out.n_rows(),
                                          grouped.base().column(keys[k]).type()));
    pieces.push_back(out.prepend(std::move(key_cols)));
  }

  for (std::size_t g = 1; g < pieces.size(); ++g) {
    const Frame& ref = pieces.front();
    const Frame& cur = pieces[g];
    bool same = ref.n_cols() == cur.n_cols();
    for (std::size_t c = 0; same && c < ref.n_cols(); ++c)
      same = ref.column(c).name() == cur.column(c).name() &&
             ref.column(c).type() == cur.column(c).type();
    if (!same)
      throw Error(ErrorKind::Combine,
                  grouped.describe_group(g) + " produced a different column set than " +
                      grouped.describe_group(0));
  }
  return concat(pieces);
}

GroupedFrame inflate(const Frame& frame, std::span<const GridEntry> grid) {
  std::set<std::string> names;
  for (const auto& [name, values] : grid) {
    if (frame.has_column(name))
      throw Error(ErrorKind::Schema, "inflate column '" + name + "' collides with an existing column");
    if (!names.insert(name).second)
      throw Error(ErrorKind::Schema, "inflate column '" + name + "' given twice");
    if (values.empty())
      throw Error(ErrorKind::Argument, "inflate column '" + name + "' has no values");
  }

  std::size_t combos = 1;
  for (const auto& entry : grid) combos *= entry.second.size();
  const std::size_t n = frame.n_rows();

  std::vector<std::size_t> rows;
  rows.reserve(combos * n);
  for (std::size_t c = 0; c < combos; ++c)
    for (std::size_t r = 0; r < n; ++r) rows.push_back(r);
  Frame body = frame.take(rows);

  std::vector<Column> grid_cols;
  for (std::size_t e = 0; e < grid.size(); ++e) {
    // stride: product of the sizes of later entries (first entry varies slowest)
    std::size_t stride = 1;
    for (std::size_t later = e + 1; later < grid.size(); ++later) stride *= grid[later].second.size();
    const auto& values = grid[e].second;
    std::vector<Value> cells;
    cells.reserve(combos * n);
    for (std::size_t c = 0; c < combos; ++c) {
      const Value& v = values[(c / stride) % values.size()];
      for (std::size_t r = 0; r < n; ++r) cells.push_back(v);
    }
    grid_cols.push_back(Column::from_values(grid[e].first, cells));
  }
  std::vector<std::string> keys;
  for (const auto& entry : grid) keys.push_back(entry.first);
  return group_by(body.prepend(std::move(grid_cols)), std::move(keys));
}

std::vector<std::size_t> bootstrap_indices(std::size_t n_rows, std::size_t replicates,
                                           std::uint64_t seed) {
  if (n_rows == 0) throw Error(ErrorKind::Argument, "cannot bootstrap an empty frame");
  if (replicates == 0) throw Error(ErrorKind::Argument, "bootstrap needs at least one replicate");
  Xoshiro256 rng(seed);
  std::vector<std::size_t> idx(n_rows * replicates);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.bounded(n_rows));
  return idx;
}

GroupedFrame bootstrap_replicates(const Frame& frame, std::size_t replicates, std::uint64_t seed) {
  const auto idx = bootstrap_indices(frame.n_rows(), replicates, seed);
  const std::size_t n = frame.n_rows();
  std::vector<std::int64_t> replicate(idx.size());
  std::vector<Group> groups(replicates);
  for (std::size_t b = 0; b < replicates; ++b) {
    groups[b].keys = {Value(static_cast<std::int64_t>(b + 1))};
    groups[b].rows.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      replicate[b * n + r] = static_cast<std::int64_t>(b + 1);
      groups[b].rows[r] = b * n + r;
    }
  }
  if (frame.has_column("replicate"))
    throw Error(ErrorKind::Schema, "frame already has a 'replicate' column");
  Frame body = frame.take(idx).prepend({Column::integers("replicate", std::move(replicate))});
  return GroupedFrame(std::move(body), {"replicate"}, std::move(groups));
}

double quantile_type7(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::Argument, "quantile of an empty vector");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Argument, "quantile probability outside [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted)
    if (!std::isfinite(v)) throw Error(ErrorKind::Argument, "quantile input contains a non-finite value");
  std::sort(sorted.begin(), sorted.end());
  double h = static_cast<double>(sorted.size() - 1) * p;
  // snap to an order statistic when within a few ulps
  const double nearest = std::round(h);
  if (std::abs(h - nearest) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, h)) h = nearest;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

Frame aggregate(const GroupedFrame& grouped, std::span<const AggregateSpec> specs) {
  const Frame& base = grouped.base();
  for (const auto& s : specs) {
    if (s.reducer.kind == Reducer::Kind::Count) continue;
    const Column& c = base.column(s.input);
    if (!c.is_numeric())
      throw Error(ErrorKind::Type, "cannot reduce non-numeric column '" + s.input + "'");
  }

  const auto& keys = grouped.keys();
  std::vector<std::vector<Value>> out_cells(specs.size());
  for (const auto& g : grouped.groups()) {
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const auto& spec = specs[s];
      if (spec.reducer.kind == Reducer::Kind::Count) {
        out_cells[s].emplace_back(static_cast<std::int64_t>(g.rows.size()));
        continue;
      }
      const Column& c = base.column(spec.input);
      std::vector<double> vals;
      vals.reserve(g.rows.size());
      for (auto r : g.rows) {
        if (c.is_null(r)) continue;
        vals.push_back(c.type() == ColumnType::Float ? c.values<double>()[r]
                                                     : static_cast<double>(c.values<std::int64_t>()[r]));
      }
      double result = std::numeric_limits<double>::quiet_NaN();
      switch (spec.reducer.kind) {
        case Reducer::Kind::Quantile: result = quantile_type7(vals, spec.reducer.p); break;
        case Reducer::Kind::Median: result = quantile_type7(vals, 0.5); break;
        case Reducer::Kind::Mean:
          if (!vals.empty()) result = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
          break;
        case Reducer::Kind::Sum: result = std::accumulate(vals.begin(), vals.end(), 0.0); break;
        case Reducer::Kind::Max:
          if (!vals.empty()) result = *std::max_element(vals.begin(), vals.end());
          break;
        case Reducer::Kind::Count: break;
      }
      out_cells[s].emplace_back(result);
    }
  }

  // key columns keep the base column's type: take each group's first row
  std::vector<std::size_t> first_rows;
  for (const auto& g : grouped.groups()) first_rows.push_back(g.rows.empty() ? 0 : g.rows.front());
  std::vector<Column> cols;
  for (const auto& key : keys) cols.push_back(base.column(key).take(first_rows));
  for (std::size_t s = 0; s < specs.size(); ++s) {
    if (specs[s].reducer.kind == Reducer::Kind::Count) {
      std::vector<std::int64_t> v;
      for (const auto& cell : out_cells[s]) v.push_back(std::get<std::int64_t>(cell));
      cols.push_back(Column::integers(specs[s].output, std::move(v)));
    } else {
      std::vector<double> v;
      for (const auto& cell : out_cells[s]) v.push_back(std::get<double>(cell));
      cols.push_back(Column::floats(specs[s].output, std::move(v)));
    }
  }
  if (cols.empty()) return Frame({}, Frame::Labels(grouped.size())).without_labels();
  return Frame(std::move(cols));
}

}  // namespace tidyfit
