#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hierport/date.hpp"

namespace hierport {

/// Date-aligned close prices: one row per date, one column per ticker.
///
/// Invariants: dates strictly increasing, every cell finite and > 0.
struct PriceTable {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd closes;

  std::size_t n_dates() const { return dates.size(); }
  std::size_t n_tickers() const { return tickers.size(); }

  /// Throws hierport::Error if any invariant is broken.
  void validate() const;
};

/// Daily simple returns; row t is the move from price row t to t+1 and is
/// stamped with the later date.
struct ReturnMatrix {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd returns;

  std::size_t n_rows() const { return dates.size(); }
  std::size_t n_assets() const { return tickers.size(); }

  void validate() const;
};

enum class AlignPolicy {
  intersect,     // keep only dates every ticker has
  forward_fill,  // union of dates from the first common date, gaps filled with the last close
};

struct CsvSource {
  std::string ticker;
  std::filesystem::path path;
};

struct LoadOptions {
  std::string date_column = "Date";
  std::string close_column = "Close";
  AlignPolicy policy = AlignPolicy::intersect;
  /// When set, a ticker whose first row is later than this date plus
  /// `max_start_gap_days` is rejected as having insufficient history.
  std::optional<Date> required_start;
  int max_start_gap_days = 7;
  /// Wide CSV only: keep just these ticker columns (all when empty).
  std::vector<std::string> columns;
};

/// Per-ticker CSV files with a header row, an ISO date column and a close column.
PriceTable load_price_table(const std::vector<CsvSource>& sources, const LoadOptions& options = {});

/// Single wide CSV: date column first, then one close column per ticker.
PriceTable load_wide_csv(const std::filesystem::path& path, const LoadOptions& options = {});

/// Parse an in-memory wide CSV. `origin` is used in error messages.
PriceTable parse_wide_csv(const std::string& text, const std::string& origin, const LoadOptions& options = {});

/// Wide CSV rendering; shortest round-trip number formatting, so re-exports are
/// byte-identical.
std::string to_wide_csv(const PriceTable& table);

/// Rows with start <= date <= end.
PriceTable slice_dates(const PriceTable& table, Date start, Date end);

/// First table holds dates <= boundary, second holds dates > boundary.
std::pair<PriceTable, PriceTable> split_train_test(const PriceTable& table, Date boundary);

ReturnMatrix daily_returns(const PriceTable& table);

}  // namespace hierport
