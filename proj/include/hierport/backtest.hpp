#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hierport/market_data.hpp"
#include "hierport/riskstats.hpp"
#include "hierport/weights.hpp"

namespace hierport {

enum class Method { mvp, hrp, herc };
inline constexpr std::array<Method, 3> kMethods{Method::mvp, Method::hrp, Method::herc};

std::string to_string(Method m);
/// Accepts lower- or upper-case names.
Method parse_method(const std::string& name);

struct BacktestReport {
  std::string sector;
  std::string portfolio;  // method name
  std::string period;     // e.g. "train" / "test"
  std::vector<Date> dates;
  std::vector<double> daily_returns;
  std::vector<double> cumulative_series;
  PerfMetrics metrics;
};

/// p[t] = sum_i w_i r[t][i]; weights are held fixed for the whole period.
std::vector<double> portfolio_return_series(const WeightVector& w, const ReturnMatrix& r);

/// Compounded: cum[t] = prod_{u<=t}(1 + daily[u]) - 1.
std::vector<double> cumulative_series(std::span<const double> daily);

BacktestReport evaluate(const WeightVector& w, const ReturnMatrix& r, double risk_free_rate, const std::string& sector,
                        const std::string& portfolio, const std::string& period,
                        double annualization_days = kDefaultAnnualizationDays);

std::string report_to_json(const BacktestReport& report);
BacktestReport report_from_json(const std::string& text, const std::string& origin);

struct SummaryCell {
  std::string sector;
  Method method;
  PerfMetrics metrics;
};

enum class Metric { annual_return, annual_volatility, sharpe };
inline constexpr std::array<Metric, 3> kMetrics{Metric::annual_return, Metric::annual_volatility, Metric::sharpe};

struct SectorWinners {
  std::string sector;
  std::array<Method, 3> winner{};   // indexed by Metric
  std::array<bool, 3> tied{};       // winner shared the best value with a later method
};

struct SummaryTable {
  std::vector<std::string> sectors;                   // first-appearance order
  std::vector<std::array<PerfMetrics, 3>> rows;       // [sector][method]
  std::vector<SectorWinners> winners;
  std::array<std::array<std::size_t, 3>, 3> overall{};  // [method][metric] win counts
};

/// Per-sector winners (max return, min volatility, max Sharpe); ties resolve
/// to the earlier method in MVP, HRP, HERC order and are flagged.
SummaryTable summarize(std::span<const SummaryCell> cells);
SummaryTable summarize(std::span<const BacktestReport> reports);

/// Sector rows with method-metric columns and a closing `Overall` row of win counts.
std::string summary_to_csv(const SummaryTable& table, const std::string& period_column = {});

}  // namespace hierport
