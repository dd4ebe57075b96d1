#include <fstream>
#include <random>

#include "doctest.h"
#include "hierport/error.hpp"
#include "hierport/market_data.hpp"
#include "support.hpp"

using namespace hierport;
using hierport::testing::TempDir;

namespace {

void write(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

PriceTable ten_day_table() {
  PriceTable p;
  p.tickers = {"A"};
  for (int d = 1; d <= 10; ++d) p.dates.push_back(Date::from_string("2024-01-" + std::string(d < 10 ? "0" : "") + std::to_string(d)));
  p.closes.resize(10, 1);
  for (int i = 0; i < 10; ++i) p.closes(i, 0) = 100.0 + i;
  return p;
}

}  // namespace

TEST_CASE("dates parse strictly") {
  CHECK(Date::parse("2022-06-30").has_value());
  CHECK(Date::parse("2022-06-30")->to_string() == "2022-06-30");
  CHECK_FALSE(Date::parse("2022-02-30").has_value());
  CHECK_FALSE(Date::parse("2022-6-30").has_value());
  CHECK_FALSE(Date::parse("30/06/2022").has_value());
  CHECK(Date::from_string("2020-02-29").plus_days(1).to_string() == "2020-03-01");
  CHECK_THROWS_AS(Date::from_string("nope"), Error);
}

TEST_CASE("load_price_table aligns identical files") {
  TempDir dir("md");
  const std::string body = "Date,Open,Close\n2024-01-02,1,10\n2024-01-03,1,11\n2024-01-04,1,12\n";
  write(dir.path() / "A.csv", body);
  write(dir.path() / "B.csv", body);
  const PriceTable p = load_price_table({{"A", dir.path() / "A.csv"}, {"B", dir.path() / "B.csv"}});
  CHECK(p.n_dates() == 3);
  CHECK(p.n_tickers() == 2);
  CHECK(p.closes(2, 1) == 12.0);
  p.validate();
}

TEST_CASE("intersection keeps only shared dates") {
  TempDir dir("md");
  write(dir.path() / "A.csv", "Date,Close\n2024-01-01,1\n2024-01-02,2\n2024-01-03,3\n");
  write(dir.path() / "B.csv", "Date,Close\n2024-01-02,20\n2024-01-03,30\n2024-01-04,40\n");
  const PriceTable p = load_price_table({{"A", dir.path() / "A.csv"}, {"B", dir.path() / "B.csv"}});
  REQUIRE(p.n_dates() == 2);
  CHECK(p.dates[0].to_string() == "2024-01-02");
  CHECK(p.dates[1].to_string() == "2024-01-03");
  CHECK(p.closes(0, 0) == 2.0);
  CHECK(p.closes(1, 1) == 30.0);

  SUBCASE("forward fill uses the union from the first common date") {
    LoadOptions opt;
    opt.policy = AlignPolicy::forward_fill;
    const PriceTable f = load_price_table({{"A", dir.path() / "A.csv"}, {"B", dir.path() / "B.csv"}}, opt);
    REQUIRE(f.n_dates() == 3);
    CHECK(f.dates[2].to_string() == "2024-01-04");
    CHECK(f.closes(2, 0) == 3.0);  // carried forward
    CHECK(f.closes(2, 1) == 40.0);
  }
}

TEST_CASE("loading errors name the offending cell") {
  TempDir dir("md");
  write(dir.path() / "Z.csv", "Date,Close\n2024-01-01,1\n2024-01-02,0.00\n");
  try {
    load_price_table({{"Z", dir.path() / "Z.csv"}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("Close") != std::string::npos);
  }
  write(dir.path() / "bad_date.csv", "Date,Close\n2024-13-01,1\n");
  CHECK_THROWS_WITH_AS(load_price_table({{"X", dir.path() / "bad_date.csv"}}), doctest::Contains("row 2"), Error);
  write(dir.path() / "bad_num.csv", "Date,Close\n2024-01-01,abc\n");
  CHECK_THROWS_WITH_AS(load_price_table({{"X", dir.path() / "bad_num.csv"}}), doctest::Contains("unparsable price"), Error);
  write(dir.path() / "dup.csv", "Date,Close\n2024-01-01,1\n2024-01-01,2\n");
  CHECK_THROWS_WITH_AS(load_price_table({{"X", dir.path() / "dup.csv"}}), doctest::Contains("duplicate date"), Error);
  CHECK_THROWS_WITH_AS(load_price_table({{"X", dir.path() / "missing.csv"}}), doctest::Contains("cannot read"), Error);

  write(dir.path() / "A.csv", "Date,Close\n2024-01-01,1\n");
  write(dir.path() / "B.csv", "Date,Close\n2024-01-02,1\n");
  CHECK_THROWS_WITH_AS(load_price_table({{"A", dir.path() / "A.csv"}, {"B", dir.path() / "B.csv"}}),
                       doctest::Contains("no dates common"), Error);

  LoadOptions opt;
  opt.close_column = "Adj Close";
  CHECK_THROWS_WITH_AS(load_price_table({{"A", dir.path() / "A.csv"}}, opt), doctest::Contains("Adj Close"), Error);
}

TEST_CASE("insufficient history is rejected") {
  TempDir dir("md");
  write(dir.path() / "OLD.csv", "Date,Close\n2019-07-01,1\n2019-07-02,1\n2019-09-02,1\n");
  write(dir.path() / "NEW.csv", "Date,Close\n2019-09-02,1\n");
  LoadOptions opt;
  opt.required_start = Date::from_string("2019-07-01");
  CHECK_NOTHROW(load_price_table({{"OLD", dir.path() / "OLD.csv"}}, opt));
  CHECK_THROWS_WITH_AS(load_price_table({{"OLD", dir.path() / "OLD.csv"}, {"NEW", dir.path() / "NEW.csv"}}, opt),
                       doctest::Contains("insufficient history"), Error);
}

TEST_CASE("loading is order-insensitive") {
  TempDir dir("md");
  write(dir.path() / "A.csv", "Date,Close\n2024-01-01,1\n2024-01-02,2\n2024-01-03,3\n");
  write(dir.path() / "B.csv", "Date,Close\n2024-01-02,5\n2024-01-01,4\n2024-01-03,6\n");
  write(dir.path() / "C.csv", "Date,Close\n2024-01-03,9\n2024-01-02,8\n2024-01-05,7\n");
  const std::vector<CsvSource> fwd{{"A", dir.path() / "A.csv"}, {"B", dir.path() / "B.csv"}, {"C", dir.path() / "C.csv"}};
  const std::vector<CsvSource> rev{fwd[2], fwd[0], fwd[1]};
  const PriceTable p = load_price_table(fwd);
  const PriceTable q = load_price_table(rev);
  REQUIRE(p.dates == q.dates);
  CHECK(q.tickers == std::vector<std::string>{"C", "A", "B"});
  CHECK(p.closes.col(0) == q.closes.col(1));
  CHECK(p.closes.col(1) == q.closes.col(2));
  CHECK(p.closes.col(2) == q.closes.col(0));
}

TEST_CASE("wide CSV round trip is byte-identical") {
  const std::string text = "Date,A,B\n2024-01-01,100.5,20\n2024-01-02,101.25,,\n";
  CHECK_THROWS_AS(parse_wide_csv(text, "mem"), Error);  // wrong field count

  const std::string ok = "Date,A,B\n2024-01-01,100.5,20\n2024-01-02,101.25,\n2024-01-03,99.125,21.5\n";
  const PriceTable p = parse_wide_csv(ok, "mem");
  CHECK(p.n_dates() == 2);  // blank B cell dropped by intersection
  const std::string out = to_wide_csv(p);
  CHECK(out == "Date,A,B\n2024-01-01,100.5,20\n2024-01-03,99.125,21.5\n");
  CHECK(to_wide_csv(parse_wide_csv(out, "mem")) == out);

  LoadOptions opt;
  opt.columns = {"B"};
  const PriceTable only_b = parse_wide_csv(ok, "mem", opt);
  CHECK(only_b.tickers == std::vector<std::string>{"B"});
  CHECK(only_b.n_dates() == 2);
  opt.columns = {"Q"};
  CHECK_THROWS_WITH_AS(parse_wide_csv(ok, "mem", opt), doctest::Contains("'Q'"), Error);
}

TEST_CASE("split_train_test partitions the dates") {
  const PriceTable p = ten_day_table();
  auto [train, test] = split_train_test(p, Date::from_string("2024-01-05"));
  CHECK(train.n_dates() == 5);
  CHECK(test.n_dates() == 5);
  CHECK(train.dates.back().to_string() == "2024-01-05");
  CHECK(test.dates.front().to_string() == "2024-01-06");

  std::vector<Date> joined = train.dates;
  joined.insert(joined.end(), test.dates.begin(), test.dates.end());
  CHECK(joined == p.dates);
  Eigen::MatrixXd stacked(10, 1);
  stacked << train.closes, test.closes;
  CHECK(stacked == p.closes);

  CHECK_THROWS_AS(split_train_test(p, Date::from_string("2023-12-31")), Error);
  CHECK_THROWS_AS(split_train_test(p, Date::from_string("2024-01-10")), Error);  // test side empty
  CHECK_THROWS_AS(split_train_test(p, Date::from_string("2024-02-01")), Error);
}

TEST_CASE("study calendar split") {
  PriceTable p;
  p.tickers = {"X"};
  const Date start = Date::from_string("2019-07-01");
  const Date end = Date::from_string("2023-06-30");
  for (Date d = start; d <= end; d = d.plus_days(1)) p.dates.push_back(d);
  p.closes = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(p.dates.size()), 1, 50.0);
  auto [train, test] = split_train_test(p, Date::from_string("2022-06-30"));
  CHECK(train.dates.front().to_string() == "2019-07-01");
  CHECK(train.dates.back().to_string() == "2022-06-30");
  CHECK(test.dates.front().to_string() == "2022-07-01");
  CHECK(test.dates.back().to_string() == "2023-06-30");
}

TEST_CASE("daily_returns") {
  PriceTable p;
  p.tickers = {"A", "B", "C"};
  p.dates = hierport::testing::make_dates(3);
  p.closes.resize(3, 3);
  p.closes << 100, 100, 100,  //
      110, 100, 90,           //
      121, 100, 99;
  const ReturnMatrix r = daily_returns(p);
  REQUIRE(r.n_rows() == 2);
  CHECK(r.dates.front() == p.dates[1]);
  CHECK(r.returns(0, 0) == doctest::Approx(0.10).epsilon(1e-15));
  CHECK(r.returns(0, 1) == 0.0);
  CHECK(r.returns(1, 1) == 0.0);
  CHECK(r.returns(0, 2) == doctest::Approx(-0.10).epsilon(1e-15));
  CHECK(r.returns(1, 2) == doctest::Approx(0.10).epsilon(1e-15));
  r.validate();

  PriceTable one = p;
  one.dates.resize(1);
  one.closes.conservativeResize(1, 3);
  CHECK_THROWS_AS(daily_returns(one), Error);
}

TEST_CASE("compounding returns reproduces prices") {
  std::mt19937_64 gen(11);
  std::lognormal_distribution<double> move(0.0, 0.02);
  PriceTable p;
  p.tickers = hierport::testing::make_tickers(4);
  p.dates = hierport::testing::make_dates(300);
  p.closes.resize(300, 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    double px = 50.0 + 10.0 * static_cast<double>(j);
    for (Eigen::Index t = 0; t < 300; ++t) {
      p.closes(t, j) = px;
      px *= move(gen);
    }
  }
  const ReturnMatrix r = daily_returns(p);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < 4; ++j) {
    double px = p.closes(0, j);
    for (Eigen::Index t = 0; t < r.returns.rows(); ++t) {
      px *= 1.0 + r.returns(t, j);
      worst = std::max(worst, std::abs(px / p.closes(t + 1, j) - 1.0));
    }
  }
  CHECK(worst <= 1e-12);
}
