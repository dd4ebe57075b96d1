#include "hierport/allocators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "hierport/error.hpp"
#include "hierport/format.hpp"
#include "hierport/rng.hpp"

namespace hierport {

namespace {

void check_square(const CovMatrix& c) {
  if (c.values.rows() != c.values.cols() || c.values.rows() != static_cast<Eigen::Index>(c.tickers.size())) {
    invalid("covariance matrix shape does not match its tickers");
  }
  if (c.tickers.empty()) invalid("covariance matrix is empty");
}

double checked_variance(const CovMatrix& c, std::size_t i) {
  const double v = c.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  if (!(v > 0.0) || !std::isfinite(v)) invalid("ticker '" + c.tickers[i] + "' has zero or invalid variance");
  return v;
}

}  // namespace

WeightVector ivp_weights(const CovMatrix& c) {
  check_square(c);
  const std::size_t n = c.size();
  WeightVector w;
  w.tickers = c.tickers;
  w.weights.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) w.weights(static_cast<Eigen::Index>(i)) = 1.0 / checked_variance(c, i);
  w.weights /= w.weights.sum();
  return w;
}

double cluster_variance(const CovMatrix& c, std::span<const std::size_t> members) {
  check_square(c);
  if (members.empty()) invalid("cluster variance of an empty member set");
  const auto m = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXd sub(m, m);
  Eigen::VectorXd w(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const std::size_t i = members[static_cast<std::size_t>(a)];
    if (i >= c.size()) invalid("cluster member index out of range");
    w(a) = 1.0 / checked_variance(c, i);
    for (Eigen::Index b = 0; b < m; ++b) {
      sub(a, b) = c.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(members[static_cast<std::size_t>(b)]));
    }
  }
  w /= w.sum();
  return w.dot(sub * w);
}

WeightVector hrp_allocate(const CovMatrix& c, const LinkageTree& t) {
  check_square(c);
  if (t.n_leaves != c.size()) {
    invalid("linkage tree has " + std::to_string(t.n_leaves) + " leaves but covariance has " +
            std::to_string(c.size()) + " assets");
  }
  for (std::size_t i = 0; i < c.size(); ++i) checked_variance(c, i);

  const std::vector<std::size_t> order = quasi_diagonalize(t);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(c.size()));

  struct Span {
    std::size_t begin, end;
  };
  std::vector<Span> stack{{0, order.size()}};
  while (!stack.empty()) {
    const Span s = stack.back();
    stack.pop_back();
    const std::size_t m = s.end - s.begin;
    if (m < 2) continue;
    const std::size_t mid = s.begin + (m + 1) / 2;
    const std::span<const std::size_t> left(order.data() + s.begin, mid - s.begin);
    const std::span<const std::size_t> right(order.data() + mid, s.end - mid);
    const double v_left = cluster_variance(c, left);
    const double v_right = cluster_variance(c, right);
    const double alpha = 1.0 - v_left / (v_left + v_right);
    for (std::size_t i : left) w(static_cast<Eigen::Index>(i)) *= alpha;
    for (std::size_t i : right) w(static_cast<Eigen::Index>(i)) *= 1.0 - alpha;
    stack.push_back({mid, s.end});
    stack.push_back({s.begin, mid});
  }

  WeightVector out;
  out.tickers = c.tickers;
  out.weights = std::move(w);
  return out;
}

Eigen::VectorXd asset_risks(const CovMatrix& c, RiskMeasure measure) {
  check_square(c);
  Eigen::VectorXd r(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double v = checked_variance(c, i);
    r(static_cast<Eigen::Index>(i)) = measure == RiskMeasure::variance ? v : std::sqrt(v);
  }
  return r;
}

WeightVector herc_allocate(const CovMatrix& c, const LinkageTree& t, const HercParams& p) {
  check_square(c);
  if (t.n_leaves != c.size()) {
    invalid("linkage tree has " + std::to_string(t.n_leaves) + " leaves but covariance has " +
            std::to_string(c.size()) + " assets");
  }
  if (!p.k) invalid("HERC cluster count is unresolved; call resolve_cluster_count first");
  const std::size_t k = *p.k;
  if (k < 1 || k > t.n_leaves) {
    invalid("cluster count " + std::to_string(k) + " outside 1.." + std::to_string(t.n_leaves));
  }

  const Eigen::VectorXd risk = asset_risks(c, p.risk_measure);
  const ClusterAssignment clusters = cut_k(t, k);
  const std::size_t n = t.n_leaves;
  const std::size_t kept = n - k;

  auto subtree_risk = [&](std::size_t node) {
    double total = 0.0;
    for (std::size_t leaf : leaves_under(t, node)) total += risk(static_cast<Eigen::Index>(leaf));
    return total;
  };

  // Top-down over the removed merges: each splits its weight between its two
  // subtrees by their additive member risk.
  std::vector<double> node_weight(2 * n - 1, 0.0);
  const std::size_t root = n == 1 ? 0 : t.root();
  node_weight[root] = 1.0;
  for (std::size_t step = n - 1; step-- > kept;) {
    const std::size_t node = n + step;
    const Merge& m = t.merge_of(node);
    const double r_left = subtree_risk(m.left);
    const double r_right = subtree_risk(m.right);
    const double share = r_left / (r_left + r_right);
    const double w_left = p.cluster_weighting == ClusterWeighting::inverse ? 1.0 - share : share;
    node_weight[m.left] = node_weight[node] * w_left;
    node_weight[m.right] = node_weight[node] * (1.0 - w_left);
  }

  // Naive risk parity inside each final cluster.
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (std::size_t root_node : clusters.roots) {
    const auto members = leaves_under(t, root_node);
    double inv_sum = 0.0;
    for (std::size_t i : members) inv_sum += 1.0 / risk(static_cast<Eigen::Index>(i));
    for (std::size_t i : members) {
      w(static_cast<Eigen::Index>(i)) = (1.0 / risk(static_cast<Eigen::Index>(i))) / inv_sum * node_weight[root_node];
    }
  }

  WeightVector out;
  out.tickers = c.tickers;
  out.weights = std::move(w);
  return out;
}

std::size_t resolve_cluster_count(const HercParams& p, const ReturnMatrix& r) {
  if (p.k) return *p.k;
  return gap_optimal_k(r, p.gap);
}

Eigen::VectorXd simplex_sample(std::size_t n_assets, std::uint64_t seed, std::size_t index, SimplexSampling sampling) {
  auto gen = rng::substream(seed, index);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n_assets));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double u = rng::open_unit(gen);
    w(i) = sampling == SimplexSampling::flat_dirichlet ? -std::log(u) : u;
  }
  w /= w.sum();
  return w;
}

MvpResult mvp_optimize(const ExpectedReturns& mu, const CovMatrix& c, const MvpOptions& options) {
  check_square(c);
  require_same_tickers(mu.tickers, c.tickers, "mvp_optimize");
  if (options.n_samples == 0) invalid("mvp_optimize needs at least one sample");

  MvpResult res;
  res.samples.resize(options.n_samples);
  const std::size_t n_assets = c.size();

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      FrontierSample& s = res.samples[j];
      s.weights.tickers = c.tickers;
      s.weights.weights = simplex_sample(n_assets, options.seed, j, options.sampling);
      const PerfMetrics m = portfolio_metrics(s.weights, mu, c, options.risk_free_rate, options.annualization_days);
      s.annual_return = m.annual_return;
      s.annual_volatility = m.annual_volatility;
      s.sharpe = m.sharpe.value_or(std::numeric_limits<double>::quiet_NaN());
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, options.n_samples);
  if (workers == 1) {
    work(0, options.n_samples);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (options.n_samples + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(options.n_samples, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }

  // Reductions scan in index order, so ties resolve to the lowest index.
  bool have_sharpe = false;
  for (std::size_t j = 0; j < res.samples.size(); ++j) {
    const FrontierSample& s = res.samples[j];
    if (!std::isnan(s.sharpe) && (!have_sharpe || s.sharpe > res.samples[res.max_sharpe_index].sharpe)) {
      res.max_sharpe_index = j;
      have_sharpe = true;
    }
    if (s.annual_volatility < res.samples[res.min_vol_index].annual_volatility) res.min_vol_index = j;
  }

  // Pareto set: no other sample with strictly higher return and strictly lower volatility.
  std::vector<std::size_t> idx(res.samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = res.samples[a];
    const auto& sb = res.samples[b];
    if (sa.annual_volatility != sb.annual_volatility) return sa.annual_volatility < sb.annual_volatility;
    return a < b;
  });
  double best_return_below = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < idx.size();) {
    std::size_t h = g;
    const double vol = res.samples[idx[g]].annual_volatility;
    double group_best = -std::numeric_limits<double>::infinity();
    while (h < idx.size() && res.samples[idx[h]].annual_volatility == vol) {
      const double ret = res.samples[idx[h]].annual_return;
      if (ret >= best_return_below) res.frontier.push_back(idx[h]);
      group_best = std::max(group_best, ret);
      ++h;
    }
    best_return_below = std::max(best_return_below, group_best);
    g = h;
  }
  return res;
}

std::string frontier_to_csv(const MvpResult& result) {
  std::string out = "return,volatility,sharpe\n";
  for (const auto& s : result.samples) {
    out += format_number(s.annual_return) + "," + format_number(s.annual_volatility) + "," + format_number(s.sharpe) + "\n";
  }
  return out;
}

RiskMeasure parse_risk_measure(const std::string& name) {
  if (name == "std_dev") return RiskMeasure::std_dev;
  if (name == "variance") return RiskMeasure::variance;
  invalid("unknown risk measure '" + name + "' (expected std_dev or variance)");
}

ClusterWeighting parse_cluster_weighting(const std::string& name) {
  if (name == "inverse") return ClusterWeighting::inverse;
  if (name == "proportional") return ClusterWeighting::proportional;
  invalid("unknown cluster weighting '" + name + "' (expected inverse or proportional)");
}

std::string to_string(RiskMeasure m) { return m == RiskMeasure::std_dev ? "std_dev" : "variance"; }

std::string to_string(ClusterWeighting w) { return w == ClusterWeighting::inverse ? "inverse" : "proportional"; }

}  // namespace hierport
