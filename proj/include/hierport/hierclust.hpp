#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hierport/market_data.hpp"
#include "hierport/riskstats.hpp"

namespace hierport {

enum class LinkageRule { ward, single };

struct Merge {
  std::size_t left = 0;   // older (smaller) node id
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

/// Agglomerative merge history. Leaves are nodes 0..n-1; merge k creates node n+k.
struct LinkageTree {
  std::size_t n_leaves = 0;
  std::vector<Merge> merges;

  std::size_t root() const { return n_leaves + merges.size() - 1; }
  bool is_leaf(std::size_t node) const { return node < n_leaves; }
  const Merge& merge_of(std::size_t node) const { return merges[node - n_leaves]; }

  /// Structural checks: n-1 merges, each non-root node used exactly once as a
  /// child, children older than parents, sizes additive, heights finite,
  /// non-negative and non-decreasing.
  void validate() const;
};

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> labels;  // per leaf, in 0..k-1
  std::vector<std::size_t> roots;   // tree node forming each cluster, indexed by label
};

/// Full merge history over a dissimilarity matrix. Ward uses the
/// Lance-Williams recurrence on the supplied (unsquared) dissimilarities;
/// single linkage merges on the minimum member-pair distance. Ties go to the
/// lexicographically smallest (left, right) node-id pair.
LinkageTree agglomerate(const Eigen::MatrixXd& dissimilarity, LinkageRule rule = LinkageRule::ward);
LinkageTree agglomerate(const DistanceMatrix& d, LinkageRule rule = LinkageRule::ward);

/// Dendrogram leaf order, left child first.
std::vector<std::size_t> quasi_diagonalize(const LinkageTree& t);

/// Leaves under `node`, in dendrogram order.
std::vector<std::size_t> leaves_under(const LinkageTree& t, std::size_t node);

/// Remove the top k-1 merges; labels follow the quasi-diagonal leaf order.
ClusterAssignment cut_k(const LinkageTree& t, std::size_t k);

/// Within-cluster dispersion W_k = sum_r D_r / (2 n_r) for the rows of `points`.
double within_dispersion(const Eigen::MatrixXd& points, const std::vector<std::size_t>& labels, std::size_t k);

struct GapOptions {
  std::size_t k_max = 0;  // 0: min(10, n - 1)
  std::size_t b_refs = 100;
  std::uint64_t seed = 0;
  LinkageRule rule = LinkageRule::ward;
};

struct GapResult {
  std::size_t k = 1;
  std::vector<double> log_w;      // index k-1
  std::vector<double> gap;        // index k-1
  std::vector<double> s;          // index k-1, sd * sqrt(1 + 1/B)
};

/// Gap statistic over an arbitrary feature matrix (one observation per row).
/// Observed and reference sets are clustered the same way: `rule` linkage on
/// Euclidean distances between rows, cut at k.
GapResult gap_statistic(const Eigen::MatrixXd& features, const GapOptions& options);

/// Cluster count for the assets of `r`. Features are the rows of the
/// correlation-distance matrix; references are drawn uniformly over each
/// column's observed range.
std::size_t gap_optimal_k(const ReturnMatrix& r, const GapOptions& options);
GapResult gap_optimal_k_detail(const ReturnMatrix& r, const GapOptions& options);

/// Versioned dendrogram JSON (schema "hierport.dendrogram", version 1).
std::string dendrogram_json(const LinkageTree& t, const std::vector<std::string>& labels);

LinkageRule parse_linkage_rule(const std::string& name);
std::string to_string(LinkageRule rule);

}  // namespace hierport
