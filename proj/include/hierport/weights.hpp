#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hierport {

/// Long-only allocation: non-negative weights summing to one.
struct WeightVector {
  std::vector<std::string> tickers;
  Eigen::VectorXd weights;

  std::size_t size() const { return tickers.size(); }

  /// Throws if the weights are negative, non-finite, or do not sum to 1 within `tolerance`.
  void validate(double tolerance = 1e-9) const;
};

/// `ticker,weight` CSV with a header row.
std::string weights_to_csv(const WeightVector& w);
WeightVector weights_from_csv(const std::string& text, const std::string& origin);

std::string weights_to_json(const WeightVector& w);

/// Throws unless both ticker lists are identical, in order.
void require_same_tickers(const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what);

}  // namespace hierport
