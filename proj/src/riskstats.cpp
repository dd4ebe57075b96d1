#include "hierport/riskstats.hpp"

#include <algorithm>
#include <cmath>

#include "hierport/error.hpp"
#include "hierport/format.hpp"

namespace hierport {

namespace {

void require_finite(const ReturnMatrix& r) {
  if (!r.returns.allFinite()) invalid("return matrix contains non-finite values");
}

}  // namespace

ExpectedReturns expected_returns(const ReturnMatrix& r, double annualization_days) {
  if (r.n_rows() < 1) invalid("expected returns need at least 1 row");
  require_finite(r);
  ExpectedReturns mu;
  mu.tickers = r.tickers;
  mu.mu_daily = r.returns.colwise().mean().transpose();
  mu.mu_annual = mu.mu_daily * annualization_days;
  return mu;
}

CovMatrix covariance(const ReturnMatrix& r) {
  if (r.n_rows() < 2) invalid("covariance needs at least 2 rows, got " + std::to_string(r.n_rows()));
  require_finite(r);
  const Eigen::Index n = r.returns.cols();
  const double denom = static_cast<double>(r.returns.rows() - 1);
  const Eigen::MatrixXd centered = r.returns.rowwise() - r.returns.colwise().mean();

  CovMatrix c;
  c.tickers = r.tickers;
  c.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = centered.col(i).dot(centered.col(j)) / denom;
      c.values(i, j) = v;
      c.values(j, i) = v;
    }
  }
  return c;
}

CorrMatrix correlation(const ReturnMatrix& r) {
  const CovMatrix c = covariance(r);
  const Eigen::Index n = c.values.rows();
  Eigen::VectorXd sd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(c.values(i, i) > 0.0)) invalid("ticker '" + c.tickers[static_cast<std::size_t>(i)] + "' has zero variance");
    sd(i) = std::sqrt(c.values(i, i));
  }
  CorrMatrix out;
  out.tickers = c.tickers;
  out.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::clamp(c.values(i, j) / (sd(i) * sd(j)), -1.0, 1.0);
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

DistanceMatrix corr_to_distance(const CorrMatrix& c) {
  DistanceMatrix d;
  d.tickers = c.tickers;
  d.values = c.values.unaryExpr([](double rho) { return std::sqrt(std::max(0.0, (1.0 - rho) / 2.0)); });
  d.values.diagonal().setZero();
  return d;
}

double portfolio_variance(const WeightVector& w, const CovMatrix& c) {
  require_same_tickers(w.tickers, c.tickers, "portfolio_variance");
  const Eigen::Index n = c.values.rows();
  double diag = 0.0;
  double cross = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    diag += w.weights(i) * w.weights(i) * c.values(i, i);
    for (Eigen::Index j = i + 1; j < n; ++j) cross += w.weights(i) * w.weights(j) * c.values(i, j);
  }
  return diag + 2.0 * cross;
}

double annualize_volatility(double daily_sd, double annualization_days) {
  return daily_sd * std::sqrt(annualization_days);
}

std::optional<double> sharpe_ratio(double annual_return, double annual_volatility, double risk_free_rate) {
  const double excess = annual_return - risk_free_rate;
  if (annual_volatility > 0.0) return excess / annual_volatility;
  if (excess == 0.0) return 0.0;
  return std::nullopt;
}

PerfMetrics portfolio_metrics(const WeightVector& w, const ExpectedReturns& mu, const CovMatrix& c,
                              double risk_free_rate, double annualization_days) {
  require_same_tickers(w.tickers, mu.tickers, "portfolio_metrics");
  PerfMetrics m;
  m.risk_free_rate = risk_free_rate;
  m.annual_return = w.weights.dot(mu.mu_annual);
  // Rounding can leave a tiny negative quadratic form for a singular covariance.
  m.annual_volatility = annualize_volatility(std::sqrt(std::max(0.0, portfolio_variance(w, c))), annualization_days);
  m.sharpe = sharpe_ratio(m.annual_return, m.annual_volatility, risk_free_rate);
  return m;
}

PerfMetrics portfolio_metrics(const WeightVector& w, const ReturnMatrix& r, double risk_free_rate,
                              double annualization_days) {
  require_same_tickers(w.tickers, r.tickers, "portfolio_metrics");
  return portfolio_metrics(w, expected_returns(r, annualization_days), covariance(r), risk_free_rate,
                           annualization_days);
}

std::string matrix_to_csv(const std::vector<std::string>& tickers, const Eigen::MatrixXd& values) {
  std::string out;
  for (const auto& t : tickers) out += "," + csv_escape(t);
  out += "\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out += csv_escape(tickers[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < values.cols(); ++j) out += "," + format_number(values(i, j));
    out += "\n";
  }
  return out;
}

}  // namespace hierport
