#include "tidyfit/frame.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tidyfit/csv.hpp"

namespace tidyfit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Type: return "type error";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Combine: return "combine error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::SingularDesign: return "singular design";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Convergence: return "convergence failure";
    case ErrorKind::SingularGradient: return "singular gradient";
    case ErrorKind::BadStart: return "bad start";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

bool Error::is_fit_failure() const noexcept {
  switch (kind_) {
    case ErrorKind::Domain:
    case ErrorKind::SingularDesign:
    case ErrorKind::InsufficientData:
    case ErrorKind::Convergence:
    case ErrorKind::SingularGradient:
    case ErrorKind::BadStart:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(ColumnType type) {
  switch (type) {
    case ColumnType::Float: return "float";
    case ColumnType::Integer: return "integer";
    case ColumnType::Text: return "text";
    case ColumnType::Boolean: return "boolean";
  }
  return "?";
}

namespace {

bool is_number(const Value& v) {
  return std::holds_alternative<double>(v) || std::holds_alternative<std::int64_t>(v) ||
         std::holds_alternative<bool>(v);
}

double number_of(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<bool>(v) ? 1.0 : 0.0;
}

}  // namespace

int compare_values(const Value& a, const Value& b) {
  const bool a_null = std::holds_alternative<std::monostate>(a);
  const bool b_null = std::holds_alternative<std::monostate>(b);
  if (a_null || b_null) return static_cast<int>(a_null) - static_cast<int>(b_null);
  if (is_number(a) && is_number(b)) {
    if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
      const auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
      return (x > y) - (x < y);
    }
    const double x = number_of(a), y = number_of(b);
    if (std::isnan(x) || std::isnan(y)) return static_cast<int>(std::isnan(x)) - static_cast<int>(std::isnan(y));
    return (x > y) - (x < y);
  }
  if (is_number(a)) return -1;
  if (is_number(b)) return 1;
  const auto& x = std::get<std::string>(a);
  const auto& y = std::get<std::string>(b);
  return x.compare(y) < 0 ? -1 : (x == y ? 0 : 1);
}

std::string display_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "NA";
        else if constexpr (std::is_same_v<T, double>) return format_double(x);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, bool>) return x ? "TRUE" : "FALSE";
        else return x;
      },
      v);
}

// ---------------------------------------------------------------------------
// Column

Column::Column(std::string name, Storage values, std::vector<bool> nulls)
    : name_(std::move(name)), storage_(std::move(values)), nulls_(std::move(nulls)) {
  if (name_.empty()) throw Error(ErrorKind::Schema, "column name must be non-empty");
  if (!nulls_.empty() && nulls_.size() != size())
    throw Error(ErrorKind::Schema, "null mask length mismatch in column '" + name_ + "'");
  if (std::none_of(nulls_.begin(), nulls_.end(), [](bool b) { return b; })) nulls_.clear();
}

Column Column::floats(std::string name, std::vector<double> values) {
  return Column(std::move(name), std::move(values));
}
Column Column::integers(std::string name, std::vector<std::int64_t> values) {
  return Column(std::move(name), std::move(values));
}
Column Column::texts(std::string name, std::vector<std::string> values) {
  return Column(std::move(name), std::move(values));
}
Column Column::booleans(std::string name, std::vector<bool> values) {
  return Column(std::move(name), std::move(values));
}

Column Column::constant(std::string name, const Value& value, std::size_t n, ColumnType type) {
  if (std::holds_alternative<std::monostate>(value)) {
    std::vector<bool> nulls(n, true);
    switch (type) {
      case ColumnType::Float: return Column(std::move(name), std::vector<double>(n), nulls);
      case ColumnType::Integer: return Column(std::move(name), std::vector<std::int64_t>(n), nulls);
      case ColumnType::Boolean: return Column(std::move(name), std::vector<bool>(n), nulls);
      case ColumnType::Text: return Column(std::move(name), std::vector<std::string>(n), nulls);
    }
  }
  switch (type) {
    case ColumnType::Float:
      return floats(std::move(name), std::vector<double>(n, number_of(value)));
    case ColumnType::Integer:
      return integers(std::move(name), std::vector<std::int64_t>(n, std::get<std::int64_t>(value)));
    case ColumnType::Boolean:
      return booleans(std::move(name), std::vector<bool>(n, std::get<bool>(value)));
    case ColumnType::Text:
      return texts(std::move(name), std::vector<std::string>(n, display_value(value)));
  }
  throw Error(ErrorKind::Internal, "unreachable column type");
}

Column Column::from_values(std::string name, std::span<const Value> values) {
  bool all_int = true, all_num = true, all_bool = true;
  for (const auto& v : values) {
    if (std::holds_alternative<std::monostate>(v)) continue;
    all_int = all_int && std::holds_alternative<std::int64_t>(v);
    all_bool = all_bool && std::holds_alternative<bool>(v);
    all_num = all_num && (std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v));
  }
  std::vector<bool> nulls(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    nulls[i] = std::holds_alternative<std::monostate>(values[i]);

  if (all_bool && !values.empty() && std::any_of(values.begin(), values.end(), [](const Value& v) {
        return std::holds_alternative<bool>(v);
      })) {
    std::vector<bool> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!nulls[i]) out[i] = std::get<bool>(values[i]);
    return Column(std::move(name), std::move(out), std::move(nulls));
  }
  if (all_int) {
    std::vector<std::int64_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!nulls[i]) out[i] = std::get<std::int64_t>(values[i]);
    if (std::all_of(nulls.begin(), nulls.end(), [](bool b) { return b; }) && !values.empty())
      return Column(std::move(name), std::vector<std::string>(values.size()), std::move(nulls));
    return Column(std::move(name), std::move(out), std::move(nulls));
  }
  if (all_num) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!nulls[i]) out[i] = number_of(values[i]);
    return Column(std::move(name), std::move(out), std::move(nulls));
  }
  std::vector<std::string> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!nulls[i]) out[i] = display_value(values[i]);
  return Column(std::move(name), std::move(out), std::move(nulls));
}

ColumnType Column::type() const {
  switch (storage_.index()) {
    case 0: return ColumnType::Float;
    case 1: return ColumnType::Integer;
    case 2: return ColumnType::Text;
    default: return ColumnType::Boolean;
  }
}

std::size_t Column::size() const {
  return std::visit([](const auto& v) { return v.size(); }, storage_);
}

bool Column::is_numeric() const {
  return type() == ColumnType::Float || type() == ColumnType::Integer;
}

bool Column::has_nulls() const { return !nulls_.empty(); }

Value Column::at(std::size_t row) const {
  if (is_null(row)) return std::monostate{};
  return std::visit([row](const auto& v) -> Value { return Value(v[row]); }, storage_);
}

std::vector<double> Column::as_doubles() const {
  if (!is_numeric())
    throw Error(ErrorKind::Type, "column '" + name_ + "' is " + std::string(to_string(type())) +
                                     ", expected numeric");
  if (has_nulls()) throw Error(ErrorKind::Argument, "column '" + name_ + "' contains nulls");
  if (const auto* d = std::get_if<std::vector<double>>(&storage_)) return *d;
  const auto& ints = std::get<std::vector<std::int64_t>>(storage_);
  return {ints.begin(), ints.end()};
}

Column Column::take(std::span<const std::size_t> rows) const {
  Storage out = std::visit(
      [&](const auto& v) -> Storage {
        std::decay_t<decltype(v)> picked;
        picked.reserve(rows.size());
        for (auto r : rows) picked.push_back(v[r]);
        return picked;
      },
      storage_);
  std::vector<bool> nulls;
  if (!nulls_.empty()) {
    nulls.reserve(rows.size());
    for (auto r : rows) nulls.push_back(nulls_[r]);
  }
  return Column(name_, std::move(out), std::move(nulls));
}

Column Column::renamed(std::string name) const {
  Column copy = *this;
  if (name.empty()) throw Error(ErrorKind::Schema, "column name must be non-empty");
  copy.name_ = std::move(name);
  return copy;
}

bool operator==(const Column& a, const Column& b) {
  if (a.name_ != b.name_ || a.type() != b.type() || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.is_null(i) != b.is_null(i)) return false;
    if (a.is_null(i)) continue;
    if (a.type() == ColumnType::Float) {
      const double x = std::get<std::vector<double>>(a.storage_)[i];
      const double y = std::get<std::vector<double>>(b.storage_)[i];
      if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
    } else if (compare_values(a.at(i), b.at(i)) != 0) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Frame

Frame::Frame(std::vector<Column> columns, std::optional<Labels> row_labels)
    : columns_(std::move(columns)), row_labels_(std::move(row_labels)) {
  if (!columns_.empty()) {
    n_rows_ = columns_.front().size();
  } else if (row_labels_) {
    n_rows_ = row_labels_->size();
  }
  std::set<std::string_view> seen;
  for (const auto& c : columns_) {
    if (c.size() != n_rows_)
      throw Error(ErrorKind::Schema, "column '" + c.name() + "' has " + std::to_string(c.size()) +
                                         " rows, expected " + std::to_string(n_rows_));
    if (!seen.insert(c.name()).second)
      throw Error(ErrorKind::Schema, "duplicate column name '" + c.name() + "'");
  }
  if (row_labels_ && row_labels_->size() != n_rows_)
    throw Error(ErrorKind::Schema, "row label count does not match row count");
}

std::vector<std::string> Frame::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name());
  return out;
}

bool Frame::has_column(std::string_view name) const { return index_of(name).has_value(); }

std::optional<std::size_t> Frame::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name() == name) return i;
  return std::nullopt;
}

const Column& Frame::column(std::string_view name) const {
  if (auto i = index_of(name)) return columns_[*i];
  throw Error(ErrorKind::Schema, "unknown column '" + std::string(name) + "'");
}

Frame Frame::take(std::span<const std::size_t> rows) const {
  for (auto r : rows)
    if (r >= n_rows_) throw Error(ErrorKind::Argument, "row index out of range");
  std::vector<Column> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.take(rows));
  std::optional<Labels> labels;
  if (row_labels_) {
    labels.emplace();
    labels->reserve(rows.size());
    for (auto r : rows) labels->push_back((*row_labels_)[r]);
  }
  Frame f(std::move(out), std::move(labels));
  f.n_rows_ = rows.size();
  return f;
}

Frame Frame::select(std::span<const std::string> names) const {
  std::vector<Column> out;
  for (const auto& n : names) out.push_back(column(n));
  Frame f(std::move(out), row_labels_);
  f.n_rows_ = n_rows_;
  return f;
}

Frame Frame::without_labels() const { return with_labels(std::nullopt); }

Frame Frame::with_labels(std::optional<Labels> labels) const {
  Frame f(columns_, std::move(labels));
  f.n_rows_ = n_rows_;
  if (f.row_labels_ && f.row_labels_->size() != n_rows_)
    throw Error(ErrorKind::Schema, "row label count does not match row count");
  return f;
}

Frame Frame::prepend(std::vector<Column> front) const {
  front.insert(front.end(), columns_.begin(), columns_.end());
  Frame f(std::move(front), row_labels_);
  if (columns_.empty() && f.n_cols() == 0) f.n_rows_ = n_rows_;
  return f;
}

Frame Frame::append(std::vector<Column> back) const {
  std::vector<Column> all = columns_;
  all.insert(all.end(), std::make_move_iterator(back.begin()), std::make_move_iterator(back.end()));
  Frame f(std::move(all), row_labels_);
  if (f.n_cols() == 0) f.n_rows_ = n_rows_;
  return f;
}

Frame Frame::drop(std::span<const std::string> names) const {
  std::vector<Column> kept;
  for (const auto& c : columns_)
    if (std::find(names.begin(), names.end(), c.name()) == names.end()) kept.push_back(c);
  Frame f(std::move(kept), row_labels_);
  f.n_rows_ = n_rows_;
  return f;
}

bool operator==(const Frame& a, const Frame& b) {
  return a.n_rows_ == b.n_rows_ && a.row_labels_ == b.row_labels_ && a.columns_ == b.columns_;
}

Frame concat(std::span<const Frame> frames) {
  if (frames.empty()) return Frame{};
  const Frame& first = frames.front();
  bool labelled = true;
  std::size_t total = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const Frame& fr = frames[f];
    if (fr.n_cols() != first.n_cols())
      throw Error(ErrorKind::Combine, "frame " + std::to_string(f) + " has " +
                                          std::to_string(fr.n_cols()) + " columns, expected " +
                                          std::to_string(first.n_cols()));
    for (std::size_t c = 0; c < fr.n_cols(); ++c) {
      if (fr.column(c).name() != first.column(c).name() ||
          fr.column(c).type() != first.column(c).type())
        throw Error(ErrorKind::Combine, "frame " + std::to_string(f) + " column " +
                                            std::to_string(c) + " is '" + fr.column(c).name() +
                                            "' (" + std::string(to_string(fr.column(c).type())) +
                                            "), expected '" + first.column(c).name() + "' (" +
                                            std::string(to_string(first.column(c).type())) + ")");
    }
    labelled = labelled && fr.row_labels().has_value();
    total += fr.n_rows();
  }

  std::vector<Column> out;
  for (std::size_t c = 0; c < first.n_cols(); ++c) {
    Column::Storage storage = std::visit(
        [&](const auto& proto) -> Column::Storage {
          std::decay_t<decltype(proto)> all;
          all.reserve(total);
          for (const auto& fr : frames) {
            const auto& v = std::get<std::decay_t<decltype(proto)>>(fr.column(c).storage());
            all.insert(all.end(), v.begin(), v.end());
          }
          return all;
        },
        first.column(c).storage());
    std::vector<bool> nulls;
    const bool any_nulls = std::any_of(frames.begin(), frames.end(),
                                       [c](const Frame& fr) { return fr.column(c).has_nulls(); });
    if (any_nulls) {
      nulls.reserve(total);
      for (const auto& fr : frames)
        for (std::size_t r = 0; r < fr.n_rows(); ++r) nulls.push_back(fr.column(c).is_null(r));
    }
    out.emplace_back(first.column(c).name(), std::move(storage), std::move(nulls));
  }

  std::optional<Frame::Labels> labels;
  if (labelled) {
    labels.emplace();
    labels->reserve(total);
    for (const auto& fr : frames)
      labels->insert(labels->end(), fr.row_labels()->begin(), fr.row_labels()->end());
  }
  if (out.empty()) {
    // carry the row count through a placeholder label vector
    return Frame({}, Frame::Labels(total)).with_labels(labels);
  }
  return Frame(std::move(out), std::move(labels));
}

}  // namespace tidyfit
