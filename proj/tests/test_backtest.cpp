#include <random>

#include "doctest.h"
#include "hierport/backtest.hpp"
#include "hierport/error.hpp"
#include "support.hpp"

using namespace hierport;
using namespace hierport::testing;

namespace {

WeightVector weights(std::initializer_list<double> v) {
  WeightVector w;
  w.tickers = make_tickers(v.size());
  w.weights.resize(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) w.weights(i++) = x;
  return w;
}

ReturnMatrix rows(std::initializer_list<std::initializer_list<double>> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.begin()->size()));
  Eigen::Index t = 0;
  for (const auto& row : v) {
    Eigen::Index i = 0;
    for (double x : row) m(t, i++) = x;
    ++t;
  }
  return make_returns(m);
}

PerfMetrics metrics(double ret, double vol, std::optional<double> sr) {
  PerfMetrics m;
  m.annual_return = ret;
  m.annual_volatility = vol;
  m.sharpe = sr;
  return m;
}

}  // namespace

TEST_CASE("portfolio_return_series examples") {
  CHECK(portfolio_return_series(weights({1}), rows({{0.01}, {-0.02}})) == std::vector<double>{0.01, -0.02});
  CHECK(portfolio_return_series(weights({0.5, 0.5}), rows({{0.02, 0.0}}))[0] == doctest::Approx(0.01));
  CHECK(portfolio_return_series(weights({0.25, 0.75}), rows({{0.04, 0.0}}))[0] == doctest::Approx(0.01));
  WeightVector other = weights({0.5, 0.5});
  other.tickers[1] = "ZZ";
  CHECK_THROWS_AS(portfolio_return_series(other, rows({{0.02, 0.0}})), Error);
}

TEST_CASE("cumulative_series examples") {
  CHECK(cumulative_series(std::vector<double>{0.10})[0] == doctest::Approx(0.10));
  const auto c = cumulative_series(std::vector<double>{0.01, -0.01});
  CHECK(c[0] == doctest::Approx(0.01));
  CHECK(std::abs(c[1] - (-0.0001)) <= 1e-15);
  for (double x : cumulative_series(std::vector<double>(5, 0.0))) CHECK(x == 0.0);
  CHECK_THROWS_AS(cumulative_series(std::vector<double>{}), Error);
}

TEST_CASE("cumulative_series matches brute-force compounding") {
  std::mt19937_64 gen(61);
  std::normal_distribution<double> normal(0.0005, 0.02);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> daily(1 + gen() % 500);
    for (auto& x : daily) x = normal(gen);
    const auto c = cumulative_series(daily);
    REQUIRE(c.size() == daily.size());
    long double prod = 1.0L;
    for (double x : daily) prod *= 1.0L + x;
    CHECK(std::abs(c.back() - static_cast<double>(prod - 1.0L)) <= 1e-10);
  }
}

TEST_CASE("portfolio_return_series is linear in the weights") {
  std::mt19937_64 gen(67);
  const ReturnMatrix r = block_returns(5, {2, 3}, 0.4, 60);
  const WeightVector a = weights({0.1, 0.2, 0.3, 0.2, 0.2});
  const WeightVector b = weights({0.5, 0.0, 0.1, 0.1, 0.3});
  const double alpha = 0.35;
  WeightVector mix = a;
  mix.weights = alpha * a.weights + (1 - alpha) * b.weights;
  const auto sa = portfolio_return_series(a, r);
  const auto sb = portfolio_return_series(b, r);
  const auto sm = portfolio_return_series(mix, r);
  for (std::size_t t = 0; t < sm.size(); ++t) CHECK(std::abs(sm[t] - (alpha * sa[t] + (1 - alpha) * sb[t])) <= 1e-15);
}

TEST_CASE("evaluate") {
  const BacktestReport flat = evaluate(weights({1}), rows({{0.0}, {0.0}, {0.0}}), 0.0, "S", "mvp", "train");
  CHECK(flat.metrics.annual_return == 0.0);
  CHECK(flat.metrics.annual_volatility == 0.0);
  REQUIRE(flat.metrics.sharpe.has_value());
  CHECK(*flat.metrics.sharpe == 0.0);

  const BacktestReport one = evaluate(weights({1}), rows({{0.01}, {-0.01}}), 0.0, "S", "hrp", "test");
  CHECK(one.metrics.annual_volatility == doctest::Approx(std::sqrt(2e-4) * std::sqrt(252.0)));
  CHECK(std::abs(one.metrics.annual_volatility - 0.2245) <= 5e-4);
  CHECK(one.cumulative_series.size() == 2);
  CHECK(one.dates.size() == 2);

  const ReturnMatrix r = block_returns(9, {3}, 0.5, 100);
  const WeightVector w = weights({0.2, 0.3, 0.5});
  const PerfMetrics direct = portfolio_metrics(w, r, 0.01);
  const BacktestReport rep = evaluate(w, r, 0.01, "S", "herc", "train");
  CHECK(rep.metrics.annual_return == direct.annual_return);
  CHECK(rep.metrics.annual_volatility == direct.annual_volatility);
  CHECK(rep.metrics.sharpe == direct.sharpe);
}

TEST_CASE("report JSON round trip") {
  const ReturnMatrix r = block_returns(10, {2}, 0.3, 20);
  const BacktestReport rep = evaluate(weights({0.4, 0.6}), r, 0.0, "Energy & Co", "HRP", "test");
  const BacktestReport back = report_from_json(report_to_json(rep), "mem");
  CHECK(back.sector == rep.sector);
  CHECK(back.portfolio == rep.portfolio);
  CHECK(back.period == rep.period);
  CHECK(back.dates == rep.dates);
  CHECK(back.daily_returns == rep.daily_returns);
  CHECK(back.cumulative_series == rep.cumulative_series);
  CHECK(back.metrics.annual_return == rep.metrics.annual_return);
  CHECK(back.metrics.sharpe == rep.metrics.sharpe);
  CHECK_THROWS_WITH_AS(report_from_json("{}", "bad.json"), doctest::Contains("bad.json"), Error);
}

TEST_CASE("summarize tie-break") {
  const std::vector<SummaryCell> cells{
      {"S", Method::mvp, metrics(0.1, 0.1, 1.0)},
      {"S", Method::hrp, metrics(0.2, 0.2, 1.0)},
      {"S", Method::herc, metrics(0.1, 0.2, 0.5)},
  };
  const SummaryTable t = summarize(cells);
  const auto sharpe = static_cast<std::size_t>(Metric::sharpe);
  CHECK(t.winners[0].winner[sharpe] == Method::mvp);
  CHECK(t.winners[0].tied[sharpe]);
  CHECK_FALSE(t.winners[0].tied[static_cast<std::size_t>(Metric::annual_return)]);
  CHECK(t.winners[0].winner[static_cast<std::size_t>(Metric::annual_return)] == Method::hrp);
  CHECK(summary_to_csv(t).find("MVP (tie)") != std::string::npos);
}

TEST_CASE("summarize counts and errors") {
  std::mt19937_64 gen(71);
  std::uniform_real_distribution<double> u(-0.2, 0.6);
  std::vector<SummaryCell> cells;
  for (int s = 0; s < 7; ++s) {
    for (auto m : kMethods) {
      const double ret = u(gen);
      const double vol = 0.1 + std::abs(u(gen));
      cells.push_back({"S" + std::to_string(s), m, metrics(ret, vol, ret / vol)});
    }
  }
  const SummaryTable t = summarize(cells);
  CHECK(t.sectors.size() == 7);
  for (std::size_t k = 0; k < 3; ++k) {
    std::size_t total = 0;
    for (std::size_t m = 0; m < 3; ++m) total += t.overall[m][k];
    CHECK(total == 7);
  }
  // undefined Sharpe loses to any defined one
  std::vector<SummaryCell> undefined{
      {"S", Method::mvp, metrics(0.1, 0.0, std::nullopt)},
      {"S", Method::hrp, metrics(0.1, 0.2, -3.0)},
      {"S", Method::herc, metrics(0.1, 0.2, -4.0)},
  };
  CHECK(summarize(undefined).winners[0].winner[static_cast<std::size_t>(Metric::sharpe)] == Method::hrp);

  cells.pop_back();
  CHECK_THROWS_AS(summarize(cells), Error);
  cells.push_back(cells.front());
  CHECK_THROWS_AS(summarize(cells), Error);
}

TEST_CASE("summary CSV layout") {
  const std::vector<SummaryCell> cells{
      {"A", Method::mvp, metrics(0.1, 0.1, 1.0)},
      {"A", Method::hrp, metrics(0.2, 0.3, 2.0 / 3.0)},
      {"A", Method::herc, metrics(0.3, 0.4, 0.75)},
  };
  const std::string csv = summary_to_csv(summarize(cells), "train");
  CHECK(csv.rfind("Period,Sector,MVP Annual Return,MVP Annual Vol,MVP Sharpe Ratio,HRP Annual Return", 0) == 0);
  CHECK(csv.find("Return Winner,Vol Winner,Sharpe Winner\n") != std::string::npos);
  CHECK(csv.find("train,A,0.1,0.1,1,") != std::string::npos);
  CHECK(csv.find(",HERC,MVP,MVP\n") != std::string::npos);
  CHECK(csv.find("train,Overall,") != std::string::npos);
}

TEST_CASE("method names") {
  CHECK(parse_method("HRP") == Method::hrp);
  CHECK(parse_method("herc") == Method::herc);
  CHECK(to_string(Method::mvp) == "mvp");
  CHECK_THROWS_AS(parse_method("cla"), Error);
}
