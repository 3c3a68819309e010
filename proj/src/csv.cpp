#include "sonir/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sonir/error.hpp"

namespace sonir {

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

struct RawCell {
  std::string text;
  bool quoted = false;
};

using RawRow = std::vector<RawCell>;

std::vector<RawRow> split_records(std::string_view text) {
  std::vector<RawRow> rows;
  RawRow row;
  RawCell cell;
  bool in_quotes = false;
  bool row_started = false;
  std::size_t i = 0;
  auto end_cell = [&] {
    row.push_back(std::move(cell));
    cell = RawCell{};
  };
  auto end_row = [&] {
    end_cell();
    rows.push_back(std::move(row));
    row.clear();
    row_started = false;
  };
  while (i < text.size()) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.text.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        cell.text.push_back(ch);
      }
      ++i;
      continue;
    }
    row_started = true;
    if (ch == '"') {
      in_quotes = true;
      cell.quoted = true;
    } else if (ch == ',') {
      end_cell();
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
    } else {
      cell.text.push_back(ch);
    }
    ++i;
  }
  if (in_quotes) throw Error(ErrorCode::Format, "unterminated quoted field");
  if (row_started) end_row();
  return rows;
}

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos || s.empty() ||
         trim(s).size() != s.size();
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace

std::optional<double> parse_number(std::string_view text) {
  auto s = trim(text);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') {
    s.remove_prefix(1);
    if (s.empty() || s.front() == '+' || s.front() == '-') return std::nullopt;
  }
  // from_chars also accepts "inf"/"nan"; only digits, sign, '.', and exponents pass.
  if (s.find_first_not_of("0123456789.eE+-") != std::string_view::npos) return std::nullopt;
  double value = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::size_t Column::non_empty() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return c.has_value(); }));
}

const Column* Dataset::find(std::string_view column) const {
  auto it = std::find_if(columns.begin(), columns.end(),
                         [&](const Column& c) { return c.name == column; });
  return it == columns.end() ? nullptr : &*it;
}

Dataset parse_csv(std::string_view text, std::string name) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  if (trim(text).empty()) throw Error(ErrorCode::EmptyInput, "CSV input is empty");
  const auto rows = split_records(text);

  Dataset d;
  d.name = std::move(name);
  std::set<std::string> seen;
  for (const auto& h : rows.front()) {
    std::string header(h.quoted ? std::string_view(h.text) : trim(h.text));
    if (!seen.insert(header).second) {
      throw Error(ErrorCode::DuplicateHeader, "duplicate column header '" + header + "'");
    }
    d.columns.push_back(Column{header, DataType::Quantitative, {}});
  }
  const std::size_t width = d.columns.size();

  std::vector<std::vector<std::optional<std::string>>> raw(width);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const bool blank_line =
        rows[r].size() == 1 && !rows[r][0].quoted && trim(rows[r][0].text).empty();
    if (blank_line && width > 1) continue;
    if (rows[r].size() != width) {
      throw Error(ErrorCode::RaggedRow, "row " + std::to_string(r + 1) + " has " +
                                            std::to_string(rows[r].size()) + " fields, header has " +
                                            std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const auto& cell = rows[r][c];
      if (cell.text.empty() || (!cell.quoted && trim(cell.text).empty())) {
        raw[c].push_back(std::nullopt);
      } else {
        raw[c].push_back(cell.text);
      }
    }
  }

  for (std::size_t c = 0; c < width; ++c) {
    auto& col = d.columns[c];
    const bool numeric = std::all_of(raw[c].begin(), raw[c].end(), [](const auto& cell) {
      return !cell || parse_number(*cell).has_value();
    });
    col.dtype = numeric ? DataType::Quantitative : DataType::Nominal;
    col.cells.reserve(raw[c].size());
    for (auto& cell : raw[c]) {
      if (!cell) {
        col.cells.emplace_back(std::nullopt);
      } else if (numeric) {
        col.cells.emplace_back(ParamValue(*parse_number(*cell)));
      } else {
        col.cells.emplace_back(ParamValue(std::move(*cell)));
      }
    }
  }
  return d;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open dataset '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto name = path.substr(path.find_last_of("/\\") == std::string::npos
                              ? 0
                              : path.find_last_of("/\\") + 1);
  return parse_csv(ss.str(), name);
}

std::string to_csv(const Dataset& d) {
  std::string out;
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    if (c) out += ',';
    out += needs_quotes(d.columns[c].name) ? quote(d.columns[c].name) : d.columns[c].name;
  }
  out += "\r\n";
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
      if (c) out += ',';
      const auto& cell = d.columns[c].cells[r];
      if (!cell) continue;
      const auto text = format_value(*cell);
      out += needs_quotes(text) ? quote(text) : text;
    }
    out += "\r\n";
  }
  return out;
}

ColumnStats column_stats(const Column& column) {
  if (column.dtype != DataType::Quantitative) {
    throw Error(ErrorCode::NotQuantitative, "column '" + column.name + "' is nominal");
  }
  ColumnStats s{0.0, 0.0, 0};
  for (const auto& cell : column.cells) {
    if (!cell) continue;
    const double v = std::get<double>(*cell);
    if (s.count == 0) {
      s.min = s.max = v;
    } else {
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    ++s.count;
  }
  if (s.count == 0) throw Error(ErrorCode::AllEmpty, "column '" + column.name + "' has no values");
  return s;
}

}  // namespace sonir
