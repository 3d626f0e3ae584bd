#pragma once
#include <cmath>
#include <string>
#include <vector>

#include "wmp/errors.hpp"
#include "wmp/flow.hpp"
#include "wmp/linalg.hpp"
#include "wmp/rng.hpp"
#include "wmp/tree.hpp"

// Oracles for verification: everything here recomputes flow quantities from
// first principles, independently of the series/parallel solver.
namespace wmp::testing {

inline double flow_energy(const LocalTree& t, const std::vector<double>& flow, double r) {
  double e = 0.0;
  for (std::size_t v = 1; v < t.size(); ++v)
    e += flow[v] * flow[v] * std::pow(r, static_cast<double>(t.depth[v]));
  return e;
}

inline bool is_valid_unit_flow(const LocalTree& t, const std::vector<double>& flow, double tol,
                               std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (flow.size() != t.size()) return fail("flow length mismatch");
  if (std::fabs(flow[0] - 1.0) > tol) return fail("root flow != 1");
  std::vector<char> is_b(t.size(), 0);
  for (std::int32_t v : t.boundary) is_b[v] = 1;
  double absorbed = 0.0;
  for (std::int32_t v : t.boundary) absorbed += flow[v];
  if (std::fabs(absorbed - 1.0) > tol) return fail("boundary does not absorb the unit");
  for (std::size_t v = 0; v < t.size(); ++v) {
    if (is_b[v]) continue;
    double south = 0.0;
    bool any = false;
    for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c) {
      south += flow[c];
      any = any || flow[c] != 0.0;
    }
    if ((any || flow[v] != 0.0) && std::fabs(flow[v] - south) > tol)
      return fail("conservation violated at node " + std::to_string(v));
  }
  return true;
}

struct QpFlow {
  double energy = 0.0;
  std::vector<double> flow;
};

// Equality-constrained quadratic program over boundary allocations x:
// minimize x^T A x subject to sum(x) = 1, where A[i][j] accumulates
// r^depth over the shared root path of boundary nodes i and j. The
// stationarity condition gives x proportional to A^{-1} 1.
inline QpFlow qp_min_energy(const LocalTree& t, double r) {
  const std::size_t m = t.boundary.size();
  QpFlow out;
  out.flow.assign(t.size(), 0.0);
  if (m == 0) return out;
  if (m == 1 && t.boundary[0] == 0) {
    out.flow[0] = 1.0;
    return out;
  }

  // root paths (excluding the root) per boundary node
  std::vector<std::vector<std::int32_t>> paths(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::int32_t v = t.boundary[i];
    while (v > 0) {
      paths[i].push_back(v);
      v = t.parent[v];
    }
  }
  std::vector<char> on_path(t.size(), 0);
  Mat A(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::int32_t v : paths[i]) on_path[v] = 1;
    for (std::size_t j = i; j < m; ++j) {
      double s = 0.0;
      for (std::int32_t v : paths[j])
        if (on_path[v]) s += std::pow(r, static_cast<double>(t.depth[v]));
      A(i, j) = s;
      A(j, i) = s;
    }
    for (std::int32_t v : paths[i]) on_path[v] = 0;
  }

  Vec y = solve_linear(A, Vec(m, 1.0));
  double z = 0.0;
  for (double v : y) z += v;
  for (std::size_t i = 0; i < m; ++i) out.flow[t.boundary[i]] = y[i] / z;
  for (std::size_t v = t.size(); v-- > 1;) out.flow[t.parent[v]] += out.flow[v];
  out.energy = flow_energy(t, out.flow, r);
  return out;
}

// Shift mass between two random boundary nodes; stays a valid unit flow.
inline std::vector<double> perturb_unit_flow(const LocalTree& t, const std::vector<double>& flow,
                                             double magnitude, Rng& rng) {
  std::vector<double> out = flow;
  const std::size_t m = t.boundary.size();
  if (m < 2) return out;
  const std::size_t a = rng.next_below(m);
  std::size_t b = rng.next_below(m - 1);
  if (b >= a) ++b;
  const double eps = magnitude * (rng.next_double() - 0.5) * 2.0;
  std::int32_t u = t.boundary[a], v = t.boundary[b];
  // walk both paths to the root; adjustments cancel above the fork
  while (u != v) {
    if (t.depth[u] >= t.depth[v]) {
      out[u] += eps;
      u = t.parent[u];
    } else {
      out[v] -= eps;
      v = t.parent[v];
    }
  }
  return out;
}

// Galton-Watson shape with optional uniform-noise labels; boundary nodes
// guaranteed (resamples until the tree reaches its full radius).
inline LocalTree random_tree(Rng& rng, int depth, double mean_children, int k_labels,
                             std::size_t max_nodes = (1u << 20)) {
  Mat M(1, 1);
  M(0, 0) = mean_children;
  const OffspringTables tables = offspring_tables(M);
  const Vec root_dist = {1.0};
  LocalTree t;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Rng r2(rng.next_u64());
    sample_gw_tree_into(t, tables, root_dist, 1, depth, r2, max_nodes);
    if (!t.boundary.empty()) break;
  }
  if (t.boundary.empty()) throw Error("random_tree: failed to reach the requested depth");
  if (k_labels > 1) {
    for (std::size_t v = 0; v < t.size(); ++v)
      t.label[v] = static_cast<std::int8_t>(1 + rng.next_below(k_labels));
  }
  return t;
}

}  // namespace wmp::testing
