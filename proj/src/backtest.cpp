#include "hierport/backtest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "hierport/error.hpp"
#include "hierport/format.hpp"

namespace hierport {

std::string to_string(Method m) {
  switch (m) {
    case Method::mvp:
      return "mvp";
    case Method::hrp:
      return "hrp";
    case Method::herc:
      return "herc";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  for (Method m : kMethods) {
    if (to_string(m) == lower) return m;
  }
  invalid("unknown method '" + name + "' (expected mvp, hrp or herc)");
}

std::vector<double> portfolio_return_series(const WeightVector& w, const ReturnMatrix& r) {
  require_same_tickers(w.tickers, r.tickers, "portfolio_return_series");
  const Eigen::VectorXd p = r.returns * w.weights;
  return {p.data(), p.data() + p.size()};
}

std::vector<double> cumulative_series(std::span<const double> daily) {
  if (daily.empty()) invalid("cumulative series of an empty return series");
  std::vector<double> cum;
  cum.reserve(daily.size());
  double growth = 1.0;
  for (double d : daily) {
    growth *= 1.0 + d;
    cum.push_back(growth - 1.0);
  }
  return cum;
}

BacktestReport evaluate(const WeightVector& w, const ReturnMatrix& r, double risk_free_rate, const std::string& sector,
                        const std::string& portfolio, const std::string& period, double annualization_days) {
  BacktestReport rep;
  rep.sector = sector;
  rep.portfolio = portfolio;
  rep.period = period;
  rep.dates = r.dates;
  rep.daily_returns = portfolio_return_series(w, r);
  rep.cumulative_series = cumulative_series(rep.daily_returns);
  rep.metrics = portfolio_metrics(w, r, risk_free_rate, annualization_days);
  return rep;
}

std::string report_to_json(const BacktestReport& report) {
  nlohmann::ordered_json metrics;
  metrics["annual_return"] = report.metrics.annual_return;
  metrics["annual_volatility"] = report.metrics.annual_volatility;
  metrics["sharpe"] = report.metrics.sharpe ? nlohmann::ordered_json(*report.metrics.sharpe) : nlohmann::ordered_json();
  metrics["risk_free_rate"] = report.metrics.risk_free_rate;

  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < report.dates.size(); ++t) {
    series.push_back({{"date", report.dates[t].to_string()},
                      {"daily_return", report.daily_returns[t]},
                      {"cumulative", report.cumulative_series[t]}});
  }
  nlohmann::ordered_json doc;
  doc["schema"] = "hierport.report";
  doc["version"] = 1;
  doc["sector"] = report.sector;
  doc["method"] = report.portfolio;
  doc["period"] = report.period;
  doc["metrics"] = std::move(metrics);
  doc["series"] = std::move(series);
  return doc.dump(2) + "\n";
}

BacktestReport report_from_json(const std::string& text, const std::string& origin) {
  BacktestReport rep;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("schema").get<std::string>() != "hierport.report") fail(ErrorKind::data, origin + ": not a report file");
    rep.sector = doc.at("sector").get<std::string>();
    rep.portfolio = doc.at("method").get<std::string>();
    rep.period = doc.at("period").get<std::string>();
    const auto& m = doc.at("metrics");
    rep.metrics.annual_return = m.at("annual_return").get<double>();
    rep.metrics.annual_volatility = m.at("annual_volatility").get<double>();
    if (!m.at("sharpe").is_null()) rep.metrics.sharpe = m.at("sharpe").get<double>();
    rep.metrics.risk_free_rate = m.at("risk_free_rate").get<double>();
    for (const auto& row : doc.at("series")) {
      rep.dates.push_back(Date::from_string(row.at("date").get<std::string>()));
      rep.daily_returns.push_back(row.at("daily_return").get<double>());
      rep.cumulative_series.push_back(row.at("cumulative").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, origin + ": malformed report JSON: " + e.what());
  }
  return rep;
}

namespace {

// Larger is better for every metric after this mapping.
double score(const PerfMetrics& m, Metric metric) {
  switch (metric) {
    case Metric::annual_return:
      return m.annual_return;
    case Metric::annual_volatility:
      return -m.annual_volatility;
    case Metric::sharpe:
      return m.sharpe.value_or(-std::numeric_limits<double>::infinity());
  }
  return 0.0;
}

}  // namespace

SummaryTable summarize(std::span<const SummaryCell> cells) {
  SummaryTable table;
  std::vector<std::array<bool, 3>> present;
  for (const auto& cell : cells) {
    auto it = std::find(table.sectors.begin(), table.sectors.end(), cell.sector);
    std::size_t s = static_cast<std::size_t>(it - table.sectors.begin());
    if (it == table.sectors.end()) {
      table.sectors.push_back(cell.sector);
      table.rows.emplace_back();
      present.push_back({});
    }
    const auto mi = static_cast<std::size_t>(cell.method);
    if (present[s][mi]) invalid("duplicate summary cell for sector '" + cell.sector + "', method " + to_string(cell.method));
    present[s][mi] = true;
    table.rows[s][mi] = cell.metrics;
  }
  if (table.sectors.empty()) invalid("summary needs at least one sector");
  for (std::size_t s = 0; s < table.sectors.size(); ++s) {
    for (Method m : kMethods) {
      if (!present[s][static_cast<std::size_t>(m)]) {
        invalid("summary is missing method " + to_string(m) + " for sector '" + table.sectors[s] + "'");
      }
    }
  }

  for (std::size_t s = 0; s < table.sectors.size(); ++s) {
    SectorWinners win;
    win.sector = table.sectors[s];
    for (Metric metric : kMetrics) {
      const auto k = static_cast<std::size_t>(metric);
      std::size_t best = 0;
      for (std::size_t m = 1; m < 3; ++m) {
        if (score(table.rows[s][m], metric) > score(table.rows[s][best], metric)) best = m;
      }
      bool tied = false;
      for (std::size_t m = 0; m < 3; ++m) {
        if (m != best && score(table.rows[s][m], metric) == score(table.rows[s][best], metric)) tied = true;
      }
      win.winner[k] = static_cast<Method>(best);
      win.tied[k] = tied;
      ++table.overall[best][k];
    }
    table.winners.push_back(std::move(win));
  }
  return table;
}

SummaryTable summarize(std::span<const BacktestReport> reports) {
  std::vector<SummaryCell> cells;
  cells.reserve(reports.size());
  for (const auto& r : reports) {
    if (!reports.empty() && r.period != reports.front().period) {
      invalid("summary mixes periods '" + reports.front().period + "' and '" + r.period + "'");
    }
    cells.push_back({r.sector, parse_method(r.portfolio), r.metrics});
  }
  return summarize(std::span<const SummaryCell>(cells));
}

std::string summary_to_csv(const SummaryTable& table, const std::string& period_column) {
  static constexpr const char* kMetricNames[3] = {"Annual Return", "Annual Vol", "Sharpe Ratio"};
  static constexpr const char* kMethodNames[3] = {"MVP", "HRP", "HERC"};
  const std::string lead = period_column.empty() ? "" : csv_escape(period_column) + ",";

  std::string out = period_column.empty() ? "" : "Period,";
  out += "Sector";
  for (const char* method : kMethodNames) {
    for (const char* metric : kMetricNames) out += std::string(",") + method + " " + metric;
  }
  out += ",Return Winner,Vol Winner,Sharpe Winner\n";

  for (std::size_t s = 0; s < table.sectors.size(); ++s) {
    out += lead + csv_escape(table.sectors[s]);
    for (std::size_t m = 0; m < 3; ++m) {
      const PerfMetrics& pm = table.rows[s][m];
      out += "," + format_number(pm.annual_return) + "," + format_number(pm.annual_volatility) + ",";
      out += pm.sharpe ? format_number(*pm.sharpe) : "undefined";
    }
    for (std::size_t k = 0; k < 3; ++k) {
      out += "," + std::string(kMethodNames[static_cast<std::size_t>(table.winners[s].winner[k])]);
      if (table.winners[s].tied[k]) out += " (tie)";
    }
    out += "\n";
  }
  out += lead + "Overall";
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t k = 0; k < 3; ++k) out += "," + std::to_string(table.overall[m][k]);
  }
  out += ",,,\n";
  return out;
}

}  // namespace hierport
