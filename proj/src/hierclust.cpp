#include "hierport/hierclust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hierport/error.hpp"
#include "hierport/rng.hpp"

namespace hierport {

namespace {

void check_dissimilarity(const Eigen::MatrixXd& d) {
  if (d.rows() != d.cols()) invalid("dissimilarity matrix is not square");
  if (d.rows() < 2) invalid("clustering needs at least 2 observations, got " + std::to_string(d.rows()));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (!std::isfinite(d(i, j)) || d(i, j) < 0.0) invalid("dissimilarities must be finite and non-negative");
      if (std::abs(d(i, j) - d(j, i)) > 1e-12) invalid("dissimilarity matrix is not symmetric");
    }
  }
}

double ward_update(double d_ki, double d_kj, double d_ij, double n_i, double n_j, double n_k) {
  const double v = ((n_i + n_k) * d_ki * d_ki + (n_j + n_k) * d_kj * d_kj - n_k * d_ij * d_ij) / (n_i + n_j + n_k);
  return std::sqrt(std::max(0.0, v));
}

Eigen::MatrixXd euclidean_distances(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

}  // namespace

void LinkageTree::validate() const {
  if (n_leaves < 1) invalid("linkage tree has no leaves");
  if (merges.size() + 1 != n_leaves) invalid("linkage tree must have n_leaves - 1 merges");
  std::vector<std::size_t> sizes(2 * n_leaves - 1, 1);
  std::vector<bool> used(2 * n_leaves - 1, false);
  double prev = 0.0;
  for (std::size_t k = 0; k < merges.size(); ++k) {
    const Merge& m = merges[k];
    const std::size_t node = n_leaves + k;
    if (m.left >= node || m.right >= node || m.left == m.right) invalid("merge " + std::to_string(k) + " has invalid children");
    if (used[m.left] || used[m.right]) invalid("merge " + std::to_string(k) + " reuses a child");
    used[m.left] = used[m.right] = true;
    sizes[node] = sizes[m.left] + sizes[m.right];
    if (m.size != sizes[node]) invalid("merge " + std::to_string(k) + " has inconsistent size");
    if (!std::isfinite(m.height) || m.height < 0.0) invalid("merge " + std::to_string(k) + " has invalid height");
    if (m.height < prev) invalid("merge heights are not non-decreasing at merge " + std::to_string(k));
    prev = m.height;
  }
}

LinkageTree agglomerate(const Eigen::MatrixXd& dissimilarity, LinkageRule rule) {
  check_dissimilarity(dissimilarity);
  const std::size_t n = static_cast<std::size_t>(dissimilarity.rows());

  // Slot s holds one active cluster; dist is kept symmetric over active slots.
  Eigen::MatrixXd dist = dissimilarity;
  std::vector<std::size_t> node(n);
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  std::iota(node.begin(), node.end(), std::size_t{0});

  LinkageTree tree;
  tree.n_leaves = n;
  tree.merges.reserve(n - 1);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_a = 0, best_b = 0;
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> best_ids{std::numeric_limits<std::size_t>::max(), 0};
    for (std::size_t a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        const double v = dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        const std::pair<std::size_t, std::size_t> ids{std::min(node[a], node[b]), std::max(node[a], node[b])};
        if (v < best || (v == best && ids < best_ids)) {
          best = v;
          best_a = a;
          best_b = b;
          best_ids = ids;
        }
      }
    }

    const auto ia = static_cast<Eigen::Index>(best_a);
    const auto ib = static_cast<Eigen::Index>(best_b);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == best_a || k == best_b) continue;
      const auto ik = static_cast<Eigen::Index>(k);
      double v = 0.0;
      if (rule == LinkageRule::ward) {
        v = ward_update(dist(ik, ia), dist(ik, ib), best, static_cast<double>(size[best_a]),
                        static_cast<double>(size[best_b]), static_cast<double>(size[k]));
      } else {
        v = std::min(dist(ik, ia), dist(ik, ib));
      }
      dist(ik, ia) = v;
      dist(ia, ik) = v;
    }

    tree.merges.push_back(Merge{best_ids.first, best_ids.second, best, size[best_a] + size[best_b]});
    node[best_a] = n + step;
    size[best_a] += size[best_b];
    active[best_b] = false;
  }
  return tree;
}

LinkageTree agglomerate(const DistanceMatrix& d, LinkageRule rule) { return agglomerate(d.values, rule); }

std::vector<std::size_t> leaves_under(const LinkageTree& t, std::size_t node) {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    const std::size_t cur = stack.back();
    stack.pop_back();
    if (t.is_leaf(cur)) {
      out.push_back(cur);
    } else {
      const Merge& m = t.merge_of(cur);
      stack.push_back(m.right);
      stack.push_back(m.left);
    }
  }
  return out;
}

std::vector<std::size_t> quasi_diagonalize(const LinkageTree& t) {
  t.validate();
  if (t.n_leaves == 1) return {0};
  return leaves_under(t, t.root());
}

ClusterAssignment cut_k(const LinkageTree& t, std::size_t k) {
  t.validate();
  if (k < 1 || k > t.n_leaves) {
    invalid("cluster count " + std::to_string(k) + " outside 1.." + std::to_string(t.n_leaves));
  }
  const std::size_t n = t.n_leaves;
  const std::size_t kept = n - k;  // merges below the cut
  ClusterAssignment out;
  out.k = k;
  out.labels.assign(n, 0);

  // Cluster roots are the nodes that are not children of a kept merge and
  // were created at or before the cut. Walk the removed top merges down from the root.
  std::vector<std::size_t> roots;
  std::vector<std::size_t> stack{n == 1 ? 0 : t.root()};
  while (!stack.empty()) {
    const std::size_t cur = stack.back();
    stack.pop_back();
    if (cur >= n && cur - n >= kept) {
      const Merge& m = t.merge_of(cur);
      stack.push_back(m.right);
      stack.push_back(m.left);
    } else {
      roots.push_back(cur);
    }
  }
  for (std::size_t label = 0; label < roots.size(); ++label) {
    for (std::size_t leaf : leaves_under(t, roots[label])) out.labels[leaf] = label;
  }
  out.roots = std::move(roots);
  return out;
}

double within_dispersion(const Eigen::MatrixXd& points, const std::vector<std::size_t>& labels, std::size_t k) {
  // sum_r (1/(2 n_r)) sum_{i,i' in r} ||x_i - x_i'||^2 == sum_r sum_{i in r} ||x_i - centroid_r||^2
  const Eigen::Index dim = points.cols();
  Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), dim);
  std::vector<double> count(k, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    centroid.row(static_cast<Eigen::Index>(labels[i])) += points.row(static_cast<Eigen::Index>(i));
    count[labels[i]] += 1.0;
  }
  for (std::size_t r = 0; r < k; ++r) {
    if (count[r] > 0.0) centroid.row(static_cast<Eigen::Index>(r)) /= count[r];
  }
  double w = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    w += (points.row(static_cast<Eigen::Index>(i)) - centroid.row(static_cast<Eigen::Index>(labels[i]))).squaredNorm();
  }
  return w;
}

GapResult gap_statistic(const Eigen::MatrixXd& features, const GapOptions& options) {
  const std::size_t n = static_cast<std::size_t>(features.rows());
  if (n < 1) invalid("gap statistic needs at least one observation");
  const std::size_t k_max = options.k_max == 0 ? std::max<std::size_t>(1, std::min<std::size_t>(10, n - 1)) : options.k_max;
  if (k_max > n) invalid("k_max " + std::to_string(k_max) + " exceeds the number of observations " + std::to_string(n));
  if (options.b_refs < 1) invalid("gap statistic needs at least one reference dataset");

  GapResult res;
  if (k_max == 1 || n < 2) {
    res.k = 1;
    return res;
  }
  // W_n is zero for every dataset, so the curve is evaluated for k < n only.
  const std::size_t k_eval = std::min(k_max, n - 1);

  auto log_dispersions = [&](const Eigen::MatrixXd& x) {
    const LinkageTree tree = agglomerate(euclidean_distances(x), options.rule);
    std::vector<double> out(k_eval);
    for (std::size_t k = 1; k <= k_eval; ++k) {
      const double w = within_dispersion(x, cut_k(tree, k).labels, k);
      out[k - 1] = std::log(std::max(w, std::numeric_limits<double>::min()));
    }
    return out;
  };

  res.log_w = log_dispersions(features);

  const Eigen::VectorXd lo = features.colwise().minCoeff().transpose();
  const Eigen::VectorXd hi = features.colwise().maxCoeff().transpose();
  std::vector<std::vector<double>> ref_log_w(options.b_refs);
  for (std::size_t b = 0; b < options.b_refs; ++b) {
    auto gen = rng::substream(options.seed, b);
    Eigen::MatrixXd ref(features.rows(), features.cols());
    for (Eigen::Index i = 0; i < ref.rows(); ++i) {
      for (Eigen::Index j = 0; j < ref.cols(); ++j) ref(i, j) = rng::uniform(gen, lo(j), hi(j));
    }
    ref_log_w[b] = log_dispersions(ref);
  }

  const double B = static_cast<double>(options.b_refs);
  res.gap.resize(k_eval);
  res.s.resize(k_eval);
  for (std::size_t k = 0; k < k_eval; ++k) {
    double mean = 0.0;
    for (std::size_t b = 0; b < options.b_refs; ++b) mean += ref_log_w[b][k];
    mean /= B;
    double var = 0.0;
    for (std::size_t b = 0; b < options.b_refs; ++b) var += (ref_log_w[b][k] - mean) * (ref_log_w[b][k] - mean);
    var /= B;
    res.gap[k] = mean - res.log_w[k];
    res.s[k] = std::sqrt(var) * std::sqrt(1.0 + 1.0 / B);
  }

  res.k = k_max;
  for (std::size_t k = 1; k < k_eval; ++k) {
    if (res.gap[k - 1] >= res.gap[k] - res.s[k]) {
      res.k = k;
      break;
    }
  }
  return res;
}

GapResult gap_optimal_k_detail(const ReturnMatrix& r, const GapOptions& options) {
  const DistanceMatrix d = corr_to_distance(correlation(r));
  if (options.k_max > d.size()) {
    invalid("k_max " + std::to_string(options.k_max) + " exceeds the number of assets " + std::to_string(d.size()));
  }
  return gap_statistic(d.values, options);
}

std::size_t gap_optimal_k(const ReturnMatrix& r, const GapOptions& options) {
  return gap_optimal_k_detail(r, options).k;
}

std::string dendrogram_json(const LinkageTree& t, const std::vector<std::string>& labels) {
  if (labels.empty()) invalid("dendrogram needs at least one label");
  if (labels.size() != t.n_leaves) {
    invalid("dendrogram has " + std::to_string(t.n_leaves) + " leaves but " + std::to_string(labels.size()) + " labels");
  }
  t.validate();
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < t.n_leaves; ++i) {
    nodes.push_back({{"id", i}, {"ticker", labels[i]}, {"height", 0.0}, {"size", 1}});
  }
  for (std::size_t k = 0; k < t.merges.size(); ++k) {
    const Merge& m = t.merges[k];
    nodes.push_back(
        {{"id", t.n_leaves + k}, {"children", {m.left, m.right}}, {"height", m.height}, {"size", m.size}});
  }
  nlohmann::ordered_json leaf_order = nlohmann::ordered_json::array();
  for (std::size_t leaf : quasi_diagonalize(t)) leaf_order.push_back(labels[leaf]);

  nlohmann::ordered_json doc;
  doc["schema"] = "hierport.dendrogram";
  doc["version"] = 1;
  doc["n_leaves"] = t.n_leaves;
  doc["root"] = t.n_leaves == 1 ? 0 : t.root();
  doc["nodes"] = std::move(nodes);
  doc["leaf_order"] = std::move(leaf_order);
  return doc.dump(2) + "\n";
}

LinkageRule parse_linkage_rule(const std::string& name) {
  if (name == "ward") return LinkageRule::ward;
  if (name == "single") return LinkageRule::single;
  invalid("unknown linkage rule '" + name + "' (expected ward or single)");
}

std::string to_string(LinkageRule rule) { return rule == LinkageRule::ward ? "ward" : "single"; }

}  // namespace hierport
