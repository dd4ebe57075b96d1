#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hierport/market_data.hpp"
#include "hierport/weights.hpp"

namespace hierport {

inline constexpr double kDefaultAnnualizationDays = 252.0;

struct ExpectedReturns {
  std::vector<std::string> tickers;
  Eigen::VectorXd mu_daily;
  Eigen::VectorXd mu_annual;
};

/// Daily sample covariances (divisor T-1).
struct CovMatrix {
  std::vector<std::string> tickers;
  Eigen::MatrixXd values;

  std::size_t size() const { return tickers.size(); }
};

/// Pearson correlations; unit diagonal, entries clamped into [-1, 1].
struct CorrMatrix {
  std::vector<std::string> tickers;
  Eigen::MatrixXd values;

  std::size_t size() const { return tickers.size(); }
};

/// Correlation distances sqrt((1 - rho) / 2); zero diagonal, entries in [0, 1].
struct DistanceMatrix {
  std::vector<std::string> tickers;
  Eigen::MatrixXd values;

  std::size_t size() const { return tickers.size(); }
};


struct PerfMetrics {
  double annual_return = 0.0;
  double annual_volatility = 0.0;
  /// Empty when volatility is zero but the excess return is not.
  std::optional<double> sharpe;
  double risk_free_rate = 0.0;
};

ExpectedReturns expected_returns(const ReturnMatrix& r, double annualization_days = kDefaultAnnualizationDays);

CovMatrix covariance(const ReturnMatrix& r);

/// Throws naming the first ticker with zero variance.
CorrMatrix correlation(const ReturnMatrix& r);

DistanceMatrix corr_to_distance(const CorrMatrix& c);

/// Daily variance w' C w, written as the diagonal sum plus twice the upper triangle.
double portfolio_variance(const WeightVector& w, const CovMatrix& c);

/// daily_sd * sqrt(annualization_days); the one place volatility is annualized.
double annualize_volatility(double daily_sd, double annualization_days = kDefaultAnnualizationDays);

/// (R - rf) / sigma. A zero sigma yields 0 when the excess return is also
/// zero and an empty optional otherwise.
std::optional<double> sharpe_ratio(double annual_return, double annual_volatility, double risk_free_rate);

PerfMetrics portfolio_metrics(const WeightVector& w, const ReturnMatrix& r, double risk_free_rate = 0.0,
                              double annualization_days = kDefaultAnnualizationDays);

/// Metrics from precomputed expected returns and covariance; shared by the
/// Monte-Carlo optimizer so both paths produce identical numbers.
PerfMetrics portfolio_metrics(const WeightVector& w, const ExpectedReturns& mu, const CovMatrix& c,
                              double risk_free_rate = 0.0, double annualization_days = kDefaultAnnualizationDays);

/// Labelled square matrix as CSV: header `,t1,t2,...`, one labelled row per ticker.
std::string matrix_to_csv(const std::vector<std::string>& tickers, const Eigen::MatrixXd& values);

}  // namespace hierport
