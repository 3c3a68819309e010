#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sonir/synth_model.hpp"

namespace sonir {

/// Stevens measurement level of a column.
enum class DataType { Nominal, Quantitative };

inline char flag(DataType t) { return t == DataType::Quantitative ? 'Q' : 'N'; }

/// An absent cell (empty in the source) is std::nullopt. Quantitative
/// columns hold doubles, nominal columns hold tokens.
using Cell = std::optional<ParamValue>;

struct Column {
  std::string name;
  DataType dtype = DataType::Nominal;
  std::vector<Cell> cells;

  std::size_t non_empty() const;
  bool operator==(const Column&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<Column> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().cells.size(); }
  const Column* find(std::string_view column) const;
  bool operator==(const Dataset&) const = default;
};

/// RFC 4180 parsing: comma separator, double-quote quoting with "" escapes,
/// CRLF or LF records. A column is quantitative iff every non-empty cell is
/// a finite decimal number (whitespace trimmed, scientific notation allowed).
/// Throws Error{EmptyInput, RaggedRow, DuplicateHeader}.
Dataset parse_csv(std::string_view text, std::string name = {});

Dataset load_csv(const std::string& path);

/// Writes a dataset back out; parse_csv(to_csv(d)) == d.
std::string to_csv(const Dataset& d);

/// Strict decimal number test used for column typing.
std::optional<double> parse_number(std::string_view text);

struct ColumnStats {
  double min;
  double max;
  std::size_t count;
};

/// Throws Error{NotQuantitative} for N columns, Error{AllEmpty} when no cell is set.
ColumnStats column_stats(const Column& column);

}  // namespace sonir
