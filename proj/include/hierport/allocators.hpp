#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hierport/hierclust.hpp"
#include "hierport/riskstats.hpp"
#include "hierport/weights.hpp"

namespace hierport {

/// Inverse-variance portfolio from the covariance diagonal.
WeightVector ivp_weights(const CovMatrix& c);

/// Variance of the inverse-variance allocation restricted to `members`.
double cluster_variance(const CovMatrix& c, std::span<const std::size_t> members);

/// Hierarchical risk parity: quasi-diagonal ordering, then recursive bisection
/// into contiguous halves (left half gets ceil(m/2) leaves), splitting weight
/// in inverse proportion to the halves' cluster variances.
WeightVector hrp_allocate(const CovMatrix& c, const LinkageTree& t);

enum class RiskMeasure { std_dev, variance };
enum class ClusterWeighting {
  inverse,        // W1 = 1 - R1 / (R1 + R2)
  proportional,  // W1 = R1 / (R1 + R2)
};

struct HercParams {
  std::optional<std::size_t> k;  // empty: choose by gap statistic
  RiskMeasure risk_measure = RiskMeasure::std_dev;
  ClusterWeighting cluster_weighting = ClusterWeighting::inverse;
  GapOptions gap;
};

/// Hierarchical equal risk contribution. `p.k` must be set; use
/// resolve_cluster_count() first for automatic selection.
WeightVector herc_allocate(const CovMatrix& c, const LinkageTree& t, const HercParams& p);

/// `p.k` if set, otherwise gap_optimal_k on the returns.
std::size_t resolve_cluster_count(const HercParams& p, const ReturnMatrix& r);

/// Per-asset risk under the chosen measure.
Eigen::VectorXd asset_risks(const CovMatrix& c, RiskMeasure measure);

enum class SimplexSampling {
  normalized_uniform,  // n uniforms divided by their sum
  flat_dirichlet,      // n unit exponentials divided by their sum
};

struct MvpOptions {
  std::size_t n_samples = 10000;
  double risk_free_rate = 0.0;
  std::uint64_t seed = 0;
  double annualization_days = kDefaultAnnualizationDays;
  SimplexSampling sampling = SimplexSampling::normalized_uniform;
  std::size_t workers = 1;
};

struct FrontierSample {
  WeightVector weights;
  double annual_return = 0.0;
  double annual_volatility = 0.0;
  double sharpe = 0.0;  // NaN when undefined (zero volatility, nonzero excess)
};

struct MvpResult {
  std::vector<FrontierSample> samples;
  std::size_t max_sharpe_index = 0;
  std::size_t min_vol_index = 0;
  /// Indices of Pareto-nondominated samples, by increasing volatility.
  std::vector<std::size_t> frontier;

  const FrontierSample& max_sharpe() const { return samples[max_sharpe_index]; }
  const FrontierSample& min_vol() const { return samples[min_vol_index]; }
};

/// Monte-Carlo mean-variance search. Sample j draws its weights from
/// substream j of the seed, so results do not depend on `workers`.
MvpResult mvp_optimize(const ExpectedReturns& mu, const CovMatrix& c, const MvpOptions& options);

/// Weights of sample `index` of a run with this seed and sampling mode.
Eigen::VectorXd simplex_sample(std::size_t n_assets, std::uint64_t seed, std::size_t index, SimplexSampling sampling);

/// `return,volatility,sharpe` CSV, one row per sample.
std::string frontier_to_csv(const MvpResult& result);

RiskMeasure parse_risk_measure(const std::string& name);
ClusterWeighting parse_cluster_weighting(const std::string& name);
std::string to_string(RiskMeasure m);
std::string to_string(ClusterWeighting w);

}  // namespace hierport
