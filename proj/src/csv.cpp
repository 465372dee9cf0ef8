#include "tidyfit/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <iterator>
#include <set>

#include <json.hpp>

namespace tidyfit {

namespace {

struct Field {
  std::string text;
  bool quoted = false;
};

struct Record {
  std::vector<Field> fields;
  std::size_t line = 0;
};

std::vector<Record> tokenize(std::string_view text, char delim) {
  std::vector<Record> records;
  Record current;
  Field field;
  bool in_quotes = false;
  bool field_started = false;  // anything consumed for the current record
  std::size_t line = 1;
  current.line = line;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field = Field{};
  };
  auto end_record = [&] {
    if (field_started || !current.fields.empty()) {
      end_field();
      records.push_back(std::move(current));
    }
    current = Record{};
    field = Field{};
    field_started = false;
    current.line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.text.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.text.empty() && !field.quoted) {
      in_quotes = true;
      field.quoted = true;
      field_started = true;
    } else if (ch == delim) {
      field_started = true;
      end_field();
    } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (ch == '\n') {
      end_record();
      ++line;
      current.line = line;
    } else {
      field_started = true;
      field.text.push_back(ch);
    }
  }
  if (in_quotes) throw Error(ErrorKind::Parse, "unterminated quoted field starting near line " +
                                                   std::to_string(current.line));
  end_record();
  return records;
}

bool is_null_token(const Field& f) { return !f.quoted && (f.text.empty() || f.text == "NA"); }

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "TRUE" || s == "true" || s == "True") return true;
  if (s == "FALSE" || s == "false" || s == "False") return false;
  return std::nullopt;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc::result_out_of_range) return std::strtod(std::string(s).c_str(), nullptr);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

Column infer_column(std::string name, const std::vector<const Field*>& cells) {
  const std::size_t n = cells.size();
  std::vector<bool> nulls(n);
  bool any_value = false, all_bool = true, all_int = true, all_num = true;
  for (std::size_t i = 0; i < n; ++i) {
    const Field& f = *cells[i];
    if (is_null_token(f)) {
      nulls[i] = true;
      continue;
    }
    any_value = true;
    if (f.quoted) {
      all_bool = all_int = all_num = false;
      break;
    }
    if (all_bool && !parse_bool(f.text)) all_bool = false;
    if (all_int && !parse_int(f.text)) all_int = false;
    if (all_num && !all_int && !parse_double(f.text)) all_num = false;
  }
  if (!any_value) {
    // Header-only or all-null columns fall back to text.
    std::vector<std::string> out(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!nulls[i]) out[i] = cells[i]->text;
    return Column(std::move(name), std::move(out), std::move(nulls));
  }
  if (all_bool) {
    std::vector<bool> out(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!nulls[i]) out[i] = *parse_bool(cells[i]->text);
    return Column(std::move(name), std::move(out), std::move(nulls));
  }
  if (all_int) {
    std::vector<std::int64_t> out(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!nulls[i]) out[i] = *parse_int(cells[i]->text);
    return Column(std::move(name), std::move(out), std::move(nulls));
  }
  if (all_num) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!nulls[i]) out[i] = *parse_double(cells[i]->text);
    return Column(std::move(name), std::move(out), std::move(nulls));
  }
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (nulls[i]) continue;
    out[i] = cells[i]->text;
  }
  return Column(std::move(name), std::move(out), std::move(nulls));
}

/// Text that would not read back as the same text value needs quoting.
bool needs_quotes(const std::string& s, char delim) {
  if (s.empty() || s == "NA") return true;
  if (parse_bool(s) || parse_double(s)) return true;
  for (char c : s)
    if (c == delim || c == '"' || c == '\n' || c == '\r') return true;
  return false;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string render_text(const std::string& s, char delim) {
  return needs_quotes(s, delim) ? quote(s) : s;
}

std::string render_cell(const Column& c, std::size_t row, char delim) {
  if (c.is_null(row)) return "";
  switch (c.type()) {
    case ColumnType::Float: return format_double(c.values<double>()[row]);
    case ColumnType::Integer: return std::to_string(c.values<std::int64_t>()[row]);
    case ColumnType::Boolean: return c.values<bool>()[row] ? "TRUE" : "FALSE";
    case ColumnType::Text: return render_text(c.values<std::string>()[row], delim);
  }
  return "";
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[64];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", value);
  std::string out(buf, static_cast<std::size_t>(len));
  if (out.find_first_of(".eE") == std::string::npos) out += ".0";
  return out;
}

Frame read_csv(std::string_view text, const CsvOptions& options) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF)
    text.remove_prefix(3);
  auto records = tokenize(text, options.delimiter);

  std::vector<std::string> names;
  std::size_t first_data = 0;
  if (options.header) {
    if (records.empty()) throw Error(ErrorKind::Parse, "missing header line");
    for (auto& f : records.front().fields) names.push_back(f.text);
    first_data = 1;
  } else if (!records.empty()) {
    for (std::size_t i = 0; i < records.front().fields.size(); ++i)
      names.push_back("V" + std::to_string(i + 1));
  }

  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw Error(ErrorKind::Schema, "empty column name in header");
    if (!seen.insert(n).second) throw Error(ErrorKind::Schema, "duplicate column name '" + n + "'");
  }

  const std::size_t n_cols = names.size();
  for (std::size_t r = first_data; r < records.size(); ++r) {
    if (records[r].fields.size() != n_cols)
      throw Error(ErrorKind::Parse, "row " + std::to_string(r - first_data + 1) + " (line " +
                                        std::to_string(records[r].line) + ") has " +
                                        std::to_string(records[r].fields.size()) +
                                        " fields, expected " + std::to_string(n_cols));
  }

  std::optional<std::size_t> label_col;
  if (options.rowname_column) {
    for (std::size_t c = 0; c < n_cols; ++c)
      if (names[c] == *options.rowname_column) label_col = c;
    if (!label_col)
      throw Error(ErrorKind::Schema, "rowname column '" + *options.rowname_column + "' not found");
  }

  const std::size_t n_rows = records.size() - first_data;
  std::vector<Column> columns;
  std::optional<Frame::Labels> labels;
  for (std::size_t c = 0; c < n_cols; ++c) {
    std::vector<const Field*> cells;
    cells.reserve(n_rows);
    for (std::size_t r = first_data; r < records.size(); ++r) cells.push_back(&records[r].fields[c]);
    if (label_col && c == *label_col) {
      labels.emplace();
      for (const auto* f : cells) labels->push_back(f->text);
      continue;
    }
    columns.push_back(infer_column(names[c], cells));
  }
  if (columns.empty()) return Frame({}, Frame::Labels(n_rows)).with_labels(labels);
  return Frame(std::move(columns), std::move(labels));
}

Frame read_csv(std::istream& in, const CsvOptions& options) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return read_csv(std::string_view(text), options);
}

std::string write_csv(const Frame& frame, bool include_row_labels, char delimiter) {
  const bool labels = include_row_labels && frame.row_labels().has_value();
  std::string out;
  bool first = true;
  auto sep = [&] {
    if (!first) out.push_back(delimiter);
    first = false;
  };
  if (labels) {
    sep();
    out += render_text(".rownames", delimiter);
  }
  for (const auto& c : frame.columns()) {
    sep();
    out += render_text(c.name(), delimiter);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < frame.n_rows(); ++r) {
    first = true;
    if (labels) {
      sep();
      out += render_text((*frame.row_labels())[r], delimiter);
    }
    for (const auto& c : frame.columns()) {
      sep();
      out += render_cell(c, r, delimiter);
    }
    out.push_back('\n');
  }
  return out;
}

std::string write_jsonl(const Frame& frame) {
  std::string out;
  for (std::size_t r = 0; r < frame.n_rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    if (frame.row_labels()) row[".rownames"] = (*frame.row_labels())[r];
    for (const auto& c : frame.columns()) {
      if (c.is_null(r)) {
        row[c.name()] = nullptr;
        continue;
      }
      switch (c.type()) {
        case ColumnType::Float: row[c.name()] = c.values<double>()[r]; break;
        case ColumnType::Integer: row[c.name()] = c.values<std::int64_t>()[r]; break;
        case ColumnType::Boolean: row[c.name()] = static_cast<bool>(c.values<bool>()[r]); break;
        case ColumnType::Text: row[c.name()] = c.values<std::string>()[r]; break;
      }
    }
    out += row.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace tidyfit
