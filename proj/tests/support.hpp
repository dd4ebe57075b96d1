#pragma once

// Test-only generators and independent reference implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "hierport/hierclust.hpp"
#include "hierport/market_data.hpp"
#include "hierport/riskstats.hpp"

namespace hierport::testing {

inline std::vector<std::string> make_tickers(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("T" + std::to_string(i));
  return out;
}

inline std::vector<Date> make_dates(std::size_t n, Date start = Date::from_string("2020-01-01")) {
  std::vector<Date> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(start.plus_days(static_cast<int>(i)));
  return out;
}

inline ReturnMatrix make_returns(const Eigen::MatrixXd& values) {
  ReturnMatrix r;
  r.returns = values;
  r.tickers = make_tickers(static_cast<std::size_t>(values.cols()));
  r.dates = make_dates(static_cast<std::size_t>(values.rows()));
  return r;
}

inline CovMatrix make_cov(const Eigen::MatrixXd& values) {
  return CovMatrix{make_tickers(static_cast<std::size_t>(values.rows())), values};
}

/// Random symmetric positive-definite covariance with daily-scale variances.
inline Eigen::MatrixXd random_psd(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a(m, m + 3);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = normal(gen) * 0.01;
  Eigen::MatrixXd c = a * a.transpose() / static_cast<double>(a.cols());
  c.diagonal().array() += 1e-6;
  return (c + c.transpose()) / 2.0;
}

inline Eigen::MatrixXd random_diag(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(1e-5, 1e-2);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, i) = u(gen);
  return c;
}

/// Symmetric dissimilarity matrix with zero diagonal and uniform off-diagonal entries.
inline Eigen::MatrixXd random_dissimilarity(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) d(i, j) = d(j, i) = u(gen);
  return d;
}

/// Random binary tree over n leaves obeying the LinkageTree id conventions
/// (older id on the left); heights are the merge index.
inline LinkageTree random_tree(std::mt19937_64& gen, std::size_t n) {
  LinkageTree t;
  t.n_leaves = n;
  std::vector<std::size_t> active(n);
  std::vector<std::size_t> sizes(2 * n, 1);
  std::iota(active.begin(), active.end(), std::size_t{0});
  for (std::size_t k = 0; k + 1 < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
    std::size_t a = pick(gen);
    std::size_t b = pick(gen);
    while (b == a) b = pick(gen);
    const std::size_t left = std::min(active[a], active[b]);
    const std::size_t right = std::max(active[a], active[b]);
    sizes[n + k] = sizes[left] + sizes[right];
    t.merges.push_back({left, right, static_cast<double>(k), sizes[n + k]});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(std::max(a, b)));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(std::min(a, b)));
    active.push_back(n + k);
  }
  return t;
}

/// Factor-model returns: assets grouped in contiguous blocks; within-block
/// correlation rho, zero correlation across blocks.
inline ReturnMatrix block_returns(std::uint64_t seed, const std::vector<std::size_t>& block_sizes, double rho,
                                  std::size_t t_rows, double vol = 0.01) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t n = 0;
  for (auto s : block_sizes) n += s;
  Eigen::MatrixXd r(static_cast<Eigen::Index>(t_rows), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < t_rows; ++t) {
    std::size_t col = 0;
    for (auto s : block_sizes) {
      const double f = normal(gen);
      for (std::size_t i = 0; i < s; ++i, ++col) {
        const double e = normal(gen);
        r(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(col)) =
            vol * (std::sqrt(rho) * f + std::sqrt(1.0 - rho) * e);
      }
    }
  }
  return make_returns(r);
}

/// Single-asset series of even length whose annualized mean and sample
/// volatility are `annual_return` and `annual_vol`: alternating m + a, m - a.
inline ReturnMatrix returns_with_moments(double annual_return, double annual_vol, std::size_t t_rows = 252,
                                         double days = 252.0) {
  const double m = annual_return / days;
  const double n = static_cast<double>(t_rows);
  const double a = annual_vol / std::sqrt(days) * std::sqrt((n - 1.0) / n);
  Eigen::MatrixXd r(static_cast<Eigen::Index>(t_rows), 1);
  for (Eigen::Index t = 0; t < r.rows(); ++t) r(t, 0) = (t % 2 == 0) ? m + a : m - a;
  return make_returns(r);
}

/// Cluster-to-cluster linkage computed from the definition, with no recurrence.
/// Ward: D^2(A,B) = 2 [E(A u B) - E(A) - E(B)], E(C) = (1/|C|) sum_{i<j in C} d_ij^2.
inline double reference_linkage(const Eigen::MatrixXd& d, const std::vector<std::size_t>& a,
                                const std::vector<std::size_t>& b, LinkageRule rule) {
  if (rule == LinkageRule::single) {
    double best = std::numeric_limits<double>::infinity();
    for (auto i : a)
      for (auto j : b) best = std::min(best, d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    return best;
  }
  auto ess = [&](const std::vector<std::size_t>& c) {
    double s = 0.0;
    for (std::size_t x = 0; x < c.size(); ++x)
      for (std::size_t y = x + 1; y < c.size(); ++y) {
        const double v = d(static_cast<Eigen::Index>(c[x]), static_cast<Eigen::Index>(c[y]));
        s += v * v;
      }
    return s / static_cast<double>(c.size());
  };
  std::vector<std::size_t> both = a;
  both.insert(both.end(), b.begin(), b.end());
  return std::sqrt(std::max(0.0, 2.0 * (ess(both) - ess(a) - ess(b))));
}

/// Naive agglomeration: every step recomputes every cluster pair from scratch.
inline LinkageTree reference_agglomerate(const Eigen::MatrixXd& d, LinkageRule rule) {
  const std::size_t n = static_cast<std::size_t>(d.rows());
  std::vector<std::size_t> ids(n);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = i;
    members[i] = {i};
  }
  LinkageTree t;
  t.n_leaves = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> best_ids{};
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t b = 0; b < ids.size(); ++b) {
        if (a == b) continue;
        const double v = reference_linkage(d, members[a], members[b], rule);
        const std::pair<std::size_t, std::size_t> p{std::min(ids[a], ids[b]), std::max(ids[a], ids[b])};
        if (v < best || (v == best && p < best_ids)) {
          best = v;
          best_ids = p;
          ba = a;
          bb = b;
        }
      }
    t.merges.push_back({best_ids.first, best_ids.second, best, members[ba].size() + members[bb].size()});
    std::vector<std::size_t> merged = members[ba];
    merged.insert(merged.end(), members[bb].begin(), members[bb].end());
    const std::size_t hi = std::max(ba, bb), lo = std::min(ba, bb);
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(hi));
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(hi));
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(lo));
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(lo));
    ids.push_back(n + step);
    members.push_back(std::move(merged));
  }
  return t;
}

/// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hierport_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace hierport::testing
