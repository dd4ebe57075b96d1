#include "hierport/weights.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "hierport/error.hpp"
#include "hierport/format.hpp"

namespace hierport {

void WeightVector::validate(double tolerance) const {
  if (weights.size() != static_cast<Eigen::Index>(tickers.size())) invalid("weight vector shape does not match tickers");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double w = weights(i);
    if (!std::isfinite(w) || w < 0.0) {
      invalid("weight for '" + tickers[static_cast<std::size_t>(i)] + "' is negative or not finite");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > tolerance) invalid("weights sum to " + format_number(sum) + ", expected 1");
}

std::string weights_to_csv(const WeightVector& w) {
  std::string out = "ticker,weight\n";
  for (std::size_t i = 0; i < w.tickers.size(); ++i) {
    out += csv_escape(w.tickers[i]) + "," + format_number(w.weights(static_cast<Eigen::Index>(i))) + "\n";
  }
  return out;
}

WeightVector weights_from_csv(const std::string& text, const std::string& origin) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) fail(ErrorKind::data, origin + ": empty weights file");
  const auto header = detail::split_csv_line(lines[0]);
  if (header.size() != 2 || detail::trim(header[0]) != "ticker" || detail::trim(header[1]) != "weight") {
    fail(ErrorKind::data, origin + ": expected header 'ticker,weight'");
  }
  WeightVector w;
  std::vector<double> values;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto fields = detail::split_csv_line(lines[i]);
    double v = 0.0;
    if (fields.size() != 2 || !detail::parse_double(fields[1], v)) {
      fail(ErrorKind::data, origin + ": row " + std::to_string(i + 1) + ": malformed weight record");
    }
    w.tickers.emplace_back(detail::trim(fields[0]));
    values.push_back(v);
  }
  w.weights = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return w;
}

std::string weights_to_json(const WeightVector& w) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < w.tickers.size(); ++i) {
    j.push_back({{"ticker", w.tickers[i]}, {"weight", w.weights(static_cast<Eigen::Index>(i))}});
  }
  return j.dump(2) + "\n";
}

void require_same_tickers(const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what) {
  if (a != b) invalid(std::string(what) + ": ticker lists do not match");
}

}  // namespace hierport
