#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mhac/error.hpp"
#include "mhac/frame.hpp"

namespace mhac::data {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    cells.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

RawSeries parse_series_csv(std::string_view text, const VariableSpec& spec) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  RawSeries series;
  series.name = spec.name;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (!have_header) {
      require(cells.size() >= 2 && trim(cells[0]) == "date", ErrorCode::kParse,
              fmt::format("{}: line {}: header must be 'date,<column>...'", spec.name, line_no));
      series.channel_count = cells.size() - 1;
      require(series.channel_count == spec.channel_count, ErrorCode::kParse,
              fmt::format("{}: header has {} value columns, expected {}", spec.name, series.channel_count,
                          spec.channel_count));
      have_header = true;
      continue;
    }
    require(cells.size() == series.channel_count + 1, ErrorCode::kParse,
            fmt::format("{}: line {}: expected {} cells, got {}", spec.name, line_no, series.channel_count + 1,
                        cells.size()));
    Date date;
    try {
      date = Date::parse(trim(cells[0]));
    } catch (const Error&) {
      fail(ErrorCode::kParse, fmt::format("{}: line {}: bad date '{}'", spec.name, line_no, cells[0]));
    }
    if (series.values.empty()) {
      series.start_date = date;
    } else {
      const Date expected = series.end_date().plus_days(1);
      if (date != expected) {
        fail(ErrorCode::kGap, fmt::format("{}: line {}: missing day {} (found {})", spec.name, line_no,
                                          expected.iso(), date.iso()));
      }
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string_view cell = trim(cells[c]);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        fail(ErrorCode::kParse, fmt::format("{}: line {}: non-numeric value '{}'", spec.name, line_no, cell));
      }
      series.values.push_back(value);
    }
  }
  require(have_header, ErrorCode::kEmptyInput, fmt::format("{}: file is empty", spec.name));
  require(!series.values.empty(), ErrorCode::kEmptyInput, fmt::format("{}: file has no data rows", spec.name));
  return series;
}

RawSeries ingest_csv(const std::filesystem::path& path, const VariableSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, fmt::format("cannot open {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_series_csv(buffer.str(), spec);
}

}  // namespace mhac::data
