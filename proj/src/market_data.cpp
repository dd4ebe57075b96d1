#include "hierport/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "hierport/error.hpp"
#include "hierport/format.hpp"

namespace hierport {

namespace {

using detail::parse_double;
using detail::split_csv_line;
using detail::split_lines;
using detail::trim;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name, const std::string& origin) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == name) return i;
  }
  fail(ErrorKind::data, origin + ": header has no column '" + name + "'");
}

std::string cell_error(const std::string& origin, std::size_t row, const std::string& column, const std::string& msg) {
  return origin + ": row " + std::to_string(row) + ", column '" + column + "': " + msg;
}

double parse_price(std::string_view cell, const std::string& origin, std::size_t row, const std::string& column) {
  double v = 0.0;
  if (!parse_double(cell, v)) {
    fail(ErrorKind::data, cell_error(origin, row, column, "unparsable price '" + std::string(trim(cell)) + "'"));
  }
  if (!std::isfinite(v) || v <= 0.0) {
    fail(ErrorKind::data, cell_error(origin, row, column, "price must be positive and finite, got '" +
                                                              std::string(trim(cell)) + "'"));
  }
  return v;
}

Date parse_date_cell(std::string_view cell, const std::string& origin, std::size_t row, const std::string& column) {
  auto d = Date::parse(trim(cell));
  if (!d) fail(ErrorKind::data, cell_error(origin, row, column, "unparsable date '" + std::string(trim(cell)) + "'"));
  return *d;
}

using Series = std::map<Date, double>;

Series parse_single_series(const std::string& text, const std::string& origin, const LoadOptions& opt) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail(ErrorKind::data, origin + ": empty file");
  const auto header = split_csv_line(lines[0]);
  const std::size_t date_col = find_column(header, opt.date_column, origin);
  const std::size_t close_col = find_column(header, opt.close_column, origin);

  Series series;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::size_t row = i + 1;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() <= std::max(date_col, close_col)) {
      fail(ErrorKind::data, origin + ": row " + std::to_string(row) + ": expected at least " +
                                std::to_string(std::max(date_col, close_col) + 1) + " fields");
    }
    const Date d = parse_date_cell(fields[date_col], origin, row, opt.date_column);
    const double px = parse_price(fields[close_col], origin, row, opt.close_column);
    if (!series.emplace(d, px).second) {
      fail(ErrorKind::data, cell_error(origin, row, opt.date_column, "duplicate date " + d.to_string()));
    }
  }
  if (series.empty()) fail(ErrorKind::data, origin + ": no data rows");
  return series;
}

void check_history(const std::string& ticker, const Series& s, const LoadOptions& opt) {
  if (!opt.required_start) return;
  const Date first = s.begin()->first;
  if (first > opt.required_start->plus_days(opt.max_start_gap_days)) {
    fail(ErrorKind::data, "ticker '" + ticker + "' has insufficient history: first date " + first.to_string() +
                              " is after required start " + opt.required_start->to_string());
  }
}

PriceTable align(const std::vector<std::string>& tickers, const std::vector<Series>& series, const LoadOptions& opt) {
  std::vector<Date> dates;
  if (opt.policy == AlignPolicy::intersect) {
    for (const auto& [d, px] : series.front()) {
      const bool everywhere =
          std::all_of(series.begin() + 1, series.end(), [&](const Series& s) { return s.count(d) != 0; });
      if (everywhere) dates.push_back(d);
    }
  } else {
    Date start = series.front().begin()->first;
    for (const auto& s : series) start = std::max(start, s.begin()->first);
    std::set<Date> all;
    for (const auto& s : series) {
      for (auto it = s.lower_bound(start); it != s.end(); ++it) all.insert(it->first);
    }
    dates.assign(all.begin(), all.end());
  }
  if (dates.empty()) fail(ErrorKind::data, "no dates common to all tickers");

  PriceTable table;
  table.dates = dates;
  table.tickers = tickers;
  table.closes.resize(static_cast<Eigen::Index>(dates.size()), static_cast<Eigen::Index>(tickers.size()));
  for (std::size_t j = 0; j < series.size(); ++j) {
    for (std::size_t t = 0; t < dates.size(); ++t) {
      // Forward fill: last close at or before the date. Intersect: exact hit.
      auto it = series[j].upper_bound(dates[t]);
      --it;
      table.closes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = it->second;
    }
  }
  return table;
}

void require_unique(const std::vector<std::string>& tickers) {
  std::set<std::string> seen;
  for (const auto& t : tickers) {
    if (t.empty()) invalid("empty ticker name");
    if (!seen.insert(t).second) invalid("duplicate ticker '" + t + "'");
  }
}

}  // namespace

void PriceTable::validate() const {
  if (closes.rows() != static_cast<Eigen::Index>(dates.size()) ||
      closes.cols() != static_cast<Eigen::Index>(tickers.size())) {
    invalid("price table shape does not match its labels");
  }
  for (std::size_t t = 1; t < dates.size(); ++t) {
    if (!(dates[t - 1] < dates[t])) invalid("price table dates are not strictly increasing at " + dates[t].to_string());
  }
  for (Eigen::Index j = 0; j < closes.cols(); ++j) {
    for (Eigen::Index t = 0; t < closes.rows(); ++t) {
      const double v = closes(t, j);
      if (!std::isfinite(v) || v <= 0.0) {
        invalid("price for '" + tickers[static_cast<std::size_t>(j)] + "' on " +
                dates[static_cast<std::size_t>(t)].to_string() + " is not positive and finite");
      }
    }
  }
}

void ReturnMatrix::validate() const {
  if (returns.rows() != static_cast<Eigen::Index>(dates.size()) ||
      returns.cols() != static_cast<Eigen::Index>(tickers.size())) {
    invalid("return matrix shape does not match its labels");
  }
  for (Eigen::Index j = 0; j < returns.cols(); ++j) {
    for (Eigen::Index t = 0; t < returns.rows(); ++t) {
      const double v = returns(t, j);
      if (!std::isfinite(v) || v <= -1.0) {
        invalid("return for '" + tickers[static_cast<std::size_t>(j)] + "' on " +
                dates[static_cast<std::size_t>(t)].to_string() + " is not finite or not above -1");
      }
    }
  }
}

PriceTable load_price_table(const std::vector<CsvSource>& sources, const LoadOptions& options) {
  if (sources.empty()) invalid("no price sources given");
  std::vector<std::string> tickers;
  tickers.reserve(sources.size());
  for (const auto& s : sources) tickers.push_back(s.ticker);
  require_unique(tickers);

  std::vector<Series> series;
  series.reserve(sources.size());
  for (const auto& src : sources) {
    series.push_back(parse_single_series(slurp(src.path), src.path.string(), options));
    check_history(src.ticker, series.back(), options);
  }
  return align(tickers, series, options);
}

PriceTable parse_wide_csv(const std::string& text, const std::string& origin, const LoadOptions& options) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail(ErrorKind::data, origin + ": empty file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2) fail(ErrorKind::data, origin + ": expected a date column and at least one ticker column");

  std::vector<std::string> all;
  for (std::size_t j = 1; j < header.size(); ++j) all.emplace_back(trim(header[j]));
  require_unique(all);

  // keep[j] is the file column feeding output ticker j
  std::vector<std::string> tickers;
  std::vector<std::size_t> keep;
  if (options.columns.empty()) {
    tickers = all;
    for (std::size_t j = 0; j < all.size(); ++j) keep.push_back(j + 1);
  } else {
    require_unique(options.columns);
    for (const auto& want : options.columns) {
      auto it = std::find(all.begin(), all.end(), want);
      if (it == all.end()) fail(ErrorKind::data, origin + ": no column for ticker '" + want + "'");
      tickers.push_back(want);
      keep.push_back(static_cast<std::size_t>(it - all.begin()) + 1);
    }
  }

  // Blank cells mark dates a ticker did not trade; alignment decides what to do with them.
  std::vector<Series> series(tickers.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::size_t row = i + 1;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != header.size()) {
      fail(ErrorKind::data, origin + ": row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                                " fields, found " + std::to_string(fields.size()));
    }
    const Date d = parse_date_cell(fields[0], origin, row, std::string(trim(header[0])));
    for (std::size_t j = 0; j < tickers.size(); ++j) {
      const std::string& cell = fields[keep[j]];
      if (trim(cell).empty()) continue;
      const double px = parse_price(cell, origin, row, tickers[j]);
      if (!series[j].emplace(d, px).second) {
        fail(ErrorKind::data, cell_error(origin, row, std::string(trim(header[0])), "duplicate date " + d.to_string()));
      }
    }
  }
  for (std::size_t j = 0; j < tickers.size(); ++j) {
    if (series[j].empty()) fail(ErrorKind::data, origin + ": ticker '" + tickers[j] + "' has no prices");
    check_history(tickers[j], series[j], options);
  }
  return align(tickers, series, options);
}

PriceTable load_wide_csv(const std::filesystem::path& path, const LoadOptions& options) {
  return parse_wide_csv(slurp(path), path.string(), options);
}

std::string to_wide_csv(const PriceTable& table) {
  std::string out = "Date";
  for (const auto& t : table.tickers) out += "," + csv_escape(t);
  out += "\n";
  for (std::size_t t = 0; t < table.dates.size(); ++t) {
    out += table.dates[t].to_string();
    for (Eigen::Index j = 0; j < table.closes.cols(); ++j) {
      out += ",";
      out += format_number(table.closes(static_cast<Eigen::Index>(t), j));
    }
    out += "\n";
  }
  return out;
}

PriceTable slice_dates(const PriceTable& table, Date start, Date end) {
  PriceTable out;
  out.tickers = table.tickers;
  std::vector<Eigen::Index> rows;
  for (std::size_t t = 0; t < table.dates.size(); ++t) {
    if (table.dates[t] >= start && table.dates[t] <= end) {
      rows.push_back(static_cast<Eigen::Index>(t));
      out.dates.push_back(table.dates[t]);
    }
  }
  out.closes.resize(static_cast<Eigen::Index>(rows.size()), table.closes.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.closes.row(static_cast<Eigen::Index>(i)) = table.closes.row(rows[i]);
  return out;
}

std::pair<PriceTable, PriceTable> split_train_test(const PriceTable& table, Date boundary) {
  if (table.dates.empty()) invalid("cannot split an empty price table");
  if (boundary < table.dates.front() || boundary >= table.dates.back()) {
    invalid("split boundary " + boundary.to_string() + " is outside the date range " +
            table.dates.front().to_string() + ".." + table.dates.back().to_string());
  }
  const auto cut = static_cast<Eigen::Index>(
      std::upper_bound(table.dates.begin(), table.dates.end(), boundary) - table.dates.begin());
  const Eigen::Index n = static_cast<Eigen::Index>(table.dates.size());

  PriceTable train;
  PriceTable test;
  train.tickers = test.tickers = table.tickers;
  train.dates.assign(table.dates.begin(), table.dates.begin() + cut);
  test.dates.assign(table.dates.begin() + cut, table.dates.end());
  train.closes = table.closes.topRows(cut);
  test.closes = table.closes.bottomRows(n - cut);
  return {std::move(train), std::move(test)};
}

ReturnMatrix daily_returns(const PriceTable& table) {
  if (table.dates.size() < 2) invalid("daily returns need at least 2 dates, got " + std::to_string(table.dates.size()));
  const Eigen::Index n = table.closes.rows();
  ReturnMatrix r;
  r.tickers = table.tickers;
  r.dates.assign(table.dates.begin() + 1, table.dates.end());
  r.returns = (table.closes.bottomRows(n - 1).array() / table.closes.topRows(n - 1).array() - 1.0).matrix();
  return r;
}

}  // namespace hierport
