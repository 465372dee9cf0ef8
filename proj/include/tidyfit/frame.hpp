#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "tidyfit/error.hpp"

namespace tidyfit {

enum class ColumnType { Float, Integer, Text, Boolean };

std::string_view to_string(ColumnType type);

/// A single cell. monostate is a null.
using Value = std::variant<std::monostate, double, std::int64_t, std::string, bool>;

/// Total order used for group keys: numbers (and booleans) compare
/// numerically, numbers sort before text, nulls sort last.
int compare_values(const Value& a, const Value& b);
std::string display_value(const Value& v);

class Column {
 public:
  using Storage = std::variant<std::vector<double>, std::vector<std::int64_t>,
                               std::vector<std::string>, std::vector<bool>>;

  Column(std::string name, Storage values, std::vector<bool> nulls = {});

  static Column floats(std::string name, std::vector<double> values);
  static Column integers(std::string name, std::vector<std::int64_t> values);
  static Column texts(std::string name, std::vector<std::string> values);
  static Column booleans(std::string name, std::vector<bool> values);
  /// `n` copies of `value`; a null value produces an all-null column of `type`.
  static Column constant(std::string name, const Value& value, std::size_t n,
                         ColumnType type);
  /// Builds a column from cells, picking the narrowest type that holds all of
  /// them (integer, then float, then text).
  static Column from_values(std::string name, std::span<const Value> values);

  const std::string& name() const { return name_; }
  ColumnType type() const;
  std::size_t size() const;
  bool is_numeric() const;
  bool is_null(std::size_t row) const { return !nulls_.empty() && nulls_[row]; }
  bool has_nulls() const;
  const std::vector<bool>& null_mask() const { return nulls_; }
  const Storage& storage() const { return storage_; }

  template <typename T>
  const std::vector<T>& values() const {
    if (const auto* v = std::get_if<std::vector<T>>(&storage_)) return *v;
    throw Error(ErrorKind::Type, "column '" + name_ + "' has type " +
                                     std::string(to_string(type())));
  }

  Value at(std::size_t row) const;

  /// Numeric view as doubles. Errors on text columns and on nulls.
  std::vector<double> as_doubles() const;

  Column take(std::span<const std::size_t> rows) const;
  Column renamed(std::string name) const;

  friend bool operator==(const Column& a, const Column& b);

 private:
  std::string name_;
  Storage storage_;
  std::vector<bool> nulls_;  // empty when the column has no nulls
};

/// Ordered, named, equal-length columns plus optional (non-unique) row labels.
class Frame {
 public:
  using Labels = std::vector<std::string>;

  Frame() = default;
  explicit Frame(std::vector<Column> columns, std::optional<Labels> row_labels = std::nullopt);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }
  bool empty() const { return n_rows_ == 0; }

  const std::vector<Column>& columns() const { return columns_; }
  const std::optional<Labels>& row_labels() const { return row_labels_; }
  std::vector<std::string> names() const;

  bool has_column(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  const Column& column(std::string_view name) const;
  const Column& column(std::size_t index) const { return columns_.at(index); }

  Frame take(std::span<const std::size_t> rows) const;
  Frame select(std::span<const std::string> names) const;
  Frame without_labels() const;
  Frame with_labels(std::optional<Labels> labels) const;
  Frame prepend(std::vector<Column> front) const;
  Frame append(std::vector<Column> back) const;
  Frame drop(std::span<const std::string> names) const;

  friend bool operator==(const Frame& a, const Frame& b);

 private:
  std::vector<Column> columns_;
  std::optional<Labels> row_labels_;
  std::size_t n_rows_ = 0;
};

/// Row-wise concatenation; every frame must share column names and types.
Frame concat(std::span<const Frame> frames);

struct Group {
  std::vector<Value> keys;
  std::vector<std::size_t> rows;
};

/// A frame partitioned by key columns; groups are ordered by key values.
class GroupedFrame {
 public:
  GroupedFrame(Frame base, std::vector<std::string> keys, std::vector<Group> groups);

  const Frame& base() const { return base_; }
  const std::vector<std::string>& keys() const { return keys_; }
  const std::vector<Group>& groups() const { return groups_; }
  std::size_t size() const { return groups_.size(); }

  Frame group_frame(std::size_t index) const;
  std::string describe_group(std::size_t index) const;

 private:
  Frame base_;
  std::vector<std::string> keys_;
  std::vector<Group> groups_;
};

GroupedFrame group_by(const Frame& frame, std::vector<std::string> keys);

struct ApplyOptions {
  /// Worker threads; 0 or 1 runs serially.
  unsigned threads = 1;
};

using FrameFn = std::function<Frame(const Frame&)>;

/// Applies `fn` to every group and stacks the results with the group's key
/// columns prepended. Failures are rethrown with the group named.
Frame apply_combine(const GroupedFrame& grouped, const FrameFn& fn, ApplyOptions options = {});

/// As above; `fn` also receives the 0-based group index (e.g. to derive a seed).
using IndexedFrameFn = std::function<Frame(const Frame&, std::size_t)>;
Frame apply_combine(const GroupedFrame& grouped, const IndexedFrameFn& fn, ApplyOptions options = {});

using GridEntry = std::pair<std::string, std::vector<Value>>;

/// Factorial expansion: one copy of `frame` per combination of grid values,
/// grid columns first. The first grid entry varies slowest.
GroupedFrame inflate(const Frame& frame, std::span<const GridEntry> grid);

/// B resamples with replacement, stacked under a leading integer column
/// "replicate" (1..B) and grouped by it.
GroupedFrame bootstrap_replicates(const Frame& frame, std::size_t replicates, std::uint64_t seed);

/// Resampling indices used by bootstrap_replicates, replicate-major.
std::vector<std::size_t> bootstrap_indices(std::size_t n_rows, std::size_t replicates,
                                           std::uint64_t seed);

/// Sample quantile with linear interpolation between order statistics
/// (h = (n-1)p + 1).
double quantile_type7(std::span<const double> values, double p);

struct Reducer {
  enum class Kind { Quantile, Median, Mean, Sum, Max, Count };
  Kind kind = Kind::Count;
  double p = 0.5;

  static Reducer quantile(double p) { return {Kind::Quantile, p}; }
  static Reducer median() { return {Kind::Median, 0.5}; }
  static Reducer mean() { return {Kind::Mean, 0.0}; }
  static Reducer sum() { return {Kind::Sum, 0.0}; }
  static Reducer max() { return {Kind::Max, 0.0}; }
  static Reducer count() { return {Kind::Count, 0.0}; }
};

struct AggregateSpec {
  std::string output;
  std::string input;  // ignored for count
  Reducer reducer;
};

Frame aggregate(const GroupedFrame& grouped, std::span<const AggregateSpec> specs);

}  // namespace tidyfit
