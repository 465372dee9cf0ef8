#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "tidyfit/frame.hpp"

namespace tidyfit {

struct CsvOptions {
  char delimiter = ',';
  bool header = true;
  /// When set, this column is removed and becomes the frame's row labels.
  std::optional<std::string> rowname_column;
};

/// RFC 4180 reader. Column types are inferred per column (boolean, integer,
/// float, text); unquoted empty fields and NA are nulls; quoted fields are
/// always text.
Frame read_csv(std::string_view text, const CsvOptions& options = {});
Frame read_csv(std::istream& in, const CsvOptions& options = {});

/// Floats are written with 17 significant digits so they read back exactly.
/// With `include_row_labels`, labels (if any) lead as a ".rownames" column.
std::string write_csv(const Frame& frame, bool include_row_labels = true, char delimiter = ',');

/// One JSON object per row; floats use shortest round-trip rendering.
std::string write_jsonl(const Frame& frame);

/// 17-significant-digit rendering used by write_csv ("Inf", "-Inf", "NaN"
/// for non-finite values; integral values keep a trailing ".0").
std::string format_double(double value);

}  // namespace tidyfit
