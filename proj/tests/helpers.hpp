#pragma once
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "wmp/errors.hpp"
#include "wmp/model.hpp"
#include "wmp/rng.hpp"
#include "wmp/tree.hpp"

namespace wmp::testhelp {

// Build a LocalTree from a BFS-ordered parent vector (children of each node
// contiguous, parents nondecreasing). boundary: empty = depth_cap leaves.
inline LocalTree make_tree(const std::vector<int>& parents, int depth_cap,
                           std::vector<std::int32_t> boundary = {},
                           std::vector<int> labels = {}, std::vector<int> priors = {}) {
  const std::size_t n = parents.size();
  LocalTree t;
  t.depth_cap = depth_cap;
  t.parent.assign(parents.begin(), parents.end());
  t.depth.resize(n);
  t.depth[0] = 0;
  for (std::size_t v = 1; v < n; ++v) {
    if (parents[v] < 0 || parents[v] >= static_cast<int>(v))
      throw InvalidParams("make_tree: parents must be BFS ordered");
    t.depth[v] = static_cast<std::int16_t>(t.depth[parents[v]] + 1);
  }
  int max_d = 0;
  for (std::size_t v = 0; v < n; ++v) max_d = std::max(max_d, static_cast<int>(t.depth[v]));
  t.layer_begin.assign(max_d + 2, 0);
  for (std::size_t v = 0; v < n; ++v) t.layer_begin[t.depth[v] + 1]++;
  for (std::size_t d = 1; d < t.layer_begin.size(); ++d) t.layer_begin[d] += t.layer_begin[d - 1];

  t.first_child.assign(n + 1, 0);
  t.first_child[0] = 1;
  std::vector<std::int32_t> cnt(n, 0);
  for (std::size_t v = 1; v < n; ++v) ++cnt[parents[v]];
  for (std::size_t v = 0; v < n; ++v) t.first_child[v + 1] = t.first_child[v] + cnt[v];

  t.label.assign(n, 0);
  if (!labels.empty()) t.label.assign(labels.begin(), labels.end());
  t.prior.assign(n, 0);
  if (!priors.empty()) t.prior.assign(priors.begin(), priors.end());
  t.graph_node.assign(n, -1);
  if (boundary.empty()) {
    for (std::size_t v = 0; v < n; ++v)
      if (t.depth[v] == depth_cap) boundary.push_back(static_cast<std::int32_t>(v));
  }
  std::sort(boundary.begin(), boundary.end());
  t.boundary = std::move(boundary);
  return t;
}

inline LocalTree make_regular_tree(int b, int depth) {
  std::vector<int> parents{-1};
  std::size_t layer_start = 0, layer_end = 1;
  for (int d = 0; d < depth; ++d) {
    const std::size_t next_start = parents.size();
    for (std::size_t v = layer_start; v < layer_end; ++v)
      for (int c = 0; c < b; ++c) parents.push_back(static_cast<int>(v));
    layer_start = next_start;
    layer_end = parents.size();
  }
  return make_tree(parents, depth);
}

inline SbmParams balanced_two_block(long long n, double a, double b) {
  Mat Q(2, 2);
  Q(0, 0) = Q(1, 1) = a / static_cast<double>(n);
  Q(0, 1) = Q(1, 0) = b / static_cast<double>(n);
  return SbmParams({n / 2, n / 2}, Q);
}

inline SbmParams random_params(Rng& rng, int max_k = 4) {
  const int k = 2 + static_cast<int>(rng.next_below(max_k - 1));
  std::vector<long long> sizes;
  for (int i = 0; i < k; ++i) sizes.push_back(50 + static_cast<long long>(rng.next_below(950)));
  Mat Q(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      const double q = 0.001 + 0.2 * rng.next_double();
      Q(i, j) = q;
      Q(j, i) = q;
    }
  return SbmParams(std::move(sizes), std::move(Q));
}

// Three types with the first two exchangeable and equal expected degrees;
// row sums d, second eigenvalue theta with eigenvector [1,1,-2]/sqrt(6).
inline Mat exchangeable_k3_mean(double d, double theta) {
  const double a = d * (2.0 + theta) / 6.0;
  const double c = d * (1.0 - theta) / 3.0;
  const double e = d * (1.0 + 2.0 * theta) / 3.0;
  Mat M(3, 3);
  M(0, 0) = M(0, 1) = M(1, 0) = M(1, 1) = a;
  M(0, 2) = M(1, 2) = M(2, 0) = M(2, 1) = c;
  M(2, 2) = e;
  return M;
}

inline Mat symmetric_two_type_mean(double b, double theta) {
  Mat M(2, 2);
  M(0, 0) = M(1, 1) = b * (1.0 + theta) / 2.0;
  M(0, 1) = M(1, 0) = b * (1.0 - theta) / 2.0;
  return M;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - out.mean) * (x - out.mean);
  var /= (n - 1.0);
  out.se = std::sqrt(var / n);
  return out;
}

inline double binomial_se(double p_hat, double n) {
  return std::sqrt(std::max(p_hat * (1.0 - p_hat), 1e-12) / n);
}

// chi-square upper critical values at the 1% level, dof 1..8
inline double chi2_crit_1pct(int dof) {
  static const double table[] = {6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090};
  return table[dof - 1];
}

}  // namespace wmp::testhelp
