#include "wmp/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "wmp/errors.hpp"
#include "wmp/rng.hpp"

namespace wmp {

double f_update(double theta1, double theta2, double x) {
  if (!(theta1 > 0.0 && theta1 < 1.0 && theta2 > 0.0 && theta2 < 1.0))
    throw DomainError("f_update: theta parameters must lie in (0,1)");
  const double t = (x > 30.0) ? 1.0 : (x < -30.0 ? -1.0 : std::tanh(0.5 * x));
  return std::log((1.0 + theta1 * t) / (1.0 - theta2 * t));
}

namespace {

// channel likelihood of the observed prior given each true label
inline double evidence(int prior, int label, double delta, int k) {
  const double base = (1.0 - delta) / static_cast<double>(k);
  return (prior == label) ? delta + base : base;
}

}  // namespace

BpResult bp_classify_root(const LocalTree& tree, const Mat& K, const SideInfoMode& mode,
                          const BpOptions& opts, BpScratch* scratch) {
  const int k = static_cast<int>(K.rows);
  const std::size_t n = tree.size();
  const double delta = mode.delta;

  Vec prior = opts.root_prior.empty() ? stationary_distribution(K) : opts.root_prior;
  if (prior.size() != static_cast<std::size_t>(k))
    throw DimensionMismatch("bp_classify_root: root prior length");

  // upward sum-product, normalized per node; every slot is written before
  // its parent reads it, so the workspace needs no zeroing
  BpScratch local;
  BpScratch& ws = scratch ? *scratch : local;
  std::vector<double>& m = ws.m;
  double root_m0 = 0.0;
  if (k == 2) {
    // two-label messages are normalized pairs: one slot per node, and the
    // deepest layer is read straight off its priors (every leaf message is
    // one of three constants)
    const double k00 = K(0, 0), k01 = K(0, 1), k10 = K(1, 0), k11 = K(1, 1);
    const double e_base = (1.0 - delta) / 2.0;
    const double e_hit = delta + e_base;
    const double zl = e_hit + e_base;
    const double leaf_hit = e_hit / zl, leaf_miss = e_base / zl;
    auto leaf_value = [&](std::int32_t u) {
      const int p = tree.prior[u];
      return p == 1 ? leaf_hit : (p == 2 ? leaf_miss : 0.5);
    };
    const std::int32_t deep_lo = tree.layer_begin[tree.max_depth()];
    if (deep_lo == 0) {
      root_m0 = leaf_value(0);  // single-node tree
    } else {
      ws.m.resize(deep_lo);
      for (std::int32_t v = deep_lo; v-- > 0;) {
        const int p = tree.prior[v];
        double a0 = 1.0, a1 = 1.0;
        if (p == 1) {
          a0 = e_hit;
          a1 = e_base;
        } else if (p == 2) {
          a0 = e_base;
          a1 = e_hit;
        }
        const std::int32_t cb = tree.children_begin(v), ce = tree.children_end(v);
        if (cb >= deep_lo) {
          for (std::int32_t c = cb; c < ce; ++c) {
            const double c0 = leaf_value(c), c1 = 1.0 - c0;
            a0 *= k00 * c0 + k01 * c1;
            a1 *= k10 * c0 + k11 * c1;
          }
        } else {
          for (std::int32_t c = cb; c < ce; ++c) {
            const double c0 = m[c], c1 = 1.0 - c0;
            a0 *= k00 * c0 + k01 * c1;
            a1 *= k10 * c0 + k11 * c1;
          }
        }
        const double z = a0 + a1;
        if (z <= 0.0) throw Error("bp_classify_root: message underflow");
        m[v] = a0 / z;
      }
      root_m0 = m[0];
    }
  } else {
    ws.m.resize(n * static_cast<std::size_t>(k));
    Vec agg(k);
    for (std::size_t v = n; v-- > 0;) {
      for (int l = 0; l < k; ++l)
        agg[l] = tree.prior[v] ? evidence(tree.prior[v], l + 1, delta, k) : 1.0;
      for (std::int32_t c = tree.children_begin(v); c < tree.children_end(v); ++c) {
        const double* mc = &m[static_cast<std::size_t>(c) * k];
        for (int l = 0; l < k; ++l) {
          double s = 0.0;
          for (int j = 0; j < k; ++j) s += K(l, j) * mc[j];
          agg[l] *= s;
        }
      }
      double z = 0.0;
      for (int l = 0; l < k; ++l) z += agg[l];
      if (z <= 0.0) throw Error("bp_classify_root: message underflow");
      for (int l = 0; l < k; ++l) m[v * static_cast<std::size_t>(k) + l] = agg[l] / z;
    }
  }

  BpResult out;
  out.posterior.p.assign(k, 0.0);
  double z = 0.0;
  for (int l = 0; l < k; ++l) {
    const double root_m = (k == 2) ? (l == 0 ? root_m0 : 1.0 - root_m0) : m[l];
    out.posterior.p[l] = prior[l] * root_m;
    z += out.posterior.p[l];
  }
  for (int l = 0; l < k; ++l) out.posterior.p[l] /= z;
  out.label = 1;
  for (int l = 1; l < k; ++l)
    if (out.posterior.p[l] > out.posterior.p[out.label - 1]) out.label = l + 1;

  const bool want_check =
      opts.logit_check == BpOptions::LogitCheck::on ||
      (opts.logit_check == BpOptions::LogitCheck::auto_check && n <= 4096);
  if (k == 2 && want_check) {
    const double theta1 = 2.0 * K(0, 0) - 1.0;
    const double theta2 = 2.0 * K(1, 1) - 1.0;
    if (theta1 > 0.0 && theta1 < 1.0 && theta2 > 0.0 && theta2 < 1.0) {
      // logit recursion B(u) = evidence logit + sum_children f(B(child))
      ws.B.assign(n, 0.0);
      std::vector<double>& B = ws.B;
      for (std::size_t v = n; v-- > 0;) {
        double b = 0.0;
        if (tree.prior[v])
          b = std::log(evidence(tree.prior[v], 1, delta, 2) / evidence(tree.prior[v], 2, delta, 2));
        for (std::int32_t c = tree.children_begin(v); c < tree.children_end(v); ++c)
          b += f_update(theta1, theta2, B[c]);
        B[v] = b;
      }
      const double logit = std::log(prior[0] / prior[1]) + B[0];
      const double p1 = 1.0 / (1.0 + std::exp(-logit));
      out.logit_checked = true;
      out.logit_gap = std::fabs(p1 - out.posterior.p[0]);
      if (out.logit_gap > 1e-9)
        throw Error("bp_classify_root: logit recursion disagrees with sum-product");
    }
  }
  return out;
}

PosteriorVector exact_posterior_oracle(const LocalTree& tree, const Mat& K, double delta,
                                       const Vec& root_prior) {
  const int k = static_cast<int>(K.rows);
  const std::size_t n = tree.size();
  if (n > 14) throw TooLarge("exact_posterior_oracle: more than 14 nodes");
  if (root_prior.size() != static_cast<std::size_t>(k))
    throw DimensionMismatch("exact_posterior_oracle: root prior length");

  Vec acc(k, 0.0);
  std::vector<int> assign(n, 0);  // label-1 per node
  while (true) {
    double w = root_prior[assign[0]];
    for (std::size_t v = 1; v < n && w > 0.0; ++v) w *= K(assign[tree.parent[v]], assign[v]);
    if (w > 0.0) {
      for (std::size_t v = 0; v < n; ++v)
        if (tree.prior[v]) w *= evidence(tree.prior[v], assign[v] + 1, delta, k);
      acc[assign[0]] += w;
    }
    // odometer
    std::size_t pos = 0;
    while (pos < n && ++assign[pos] == k) assign[pos++] = 0;
    if (pos == n) break;
  }
  double z = 0.0;
  for (double v : acc) z += v;
  if (z <= 0.0) throw Error("exact_posterior_oracle: zero total mass");
  PosteriorVector out;
  out.p.resize(k);
  for (int l = 0; l < k; ++l) out.p[l] = acc[l] / z;
  return out;
}

std::vector<int> spectral_partition(const Graph& g, const SideInfo& side, long max_iter) {
  if (side.mode.kind != SideInfoKind::partial)
    throw InvalidParams("spectral_partition: requires partial side information");
  for (long long v = 0; v < g.n; ++v)
    if (side.prior[v] < 0 || side.prior[v] > 2)
      throw WrongK("spectral_partition: only k == 2 supported");

  std::vector<std::int32_t> sub;  // unrevealed nodes
  std::vector<std::int32_t> pos(g.n, -1);
  for (long long v = 0; v < g.n; ++v)
    if (side.prior[v] == 0) {
      pos[v] = static_cast<std::int32_t>(sub.size());
      sub.push_back(static_cast<std::int32_t>(v));
    }
  const std::size_t m = sub.size();

  std::vector<int> labels(side.prior);
  if (m == 0) return labels;

  // power iteration on the centered adjacency of the unrevealed subgraph
  Rng rng(0x5eed5 + m);
  Vec x(m), y(m);
  for (auto& v : x) v = rng.next_double() - 0.5;
  auto center = [&](Vec& v) {
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(m);
    for (double& e : v) e -= mean;
  };
  center(x);
  double nx = norm2(x);
  if (nx == 0.0) x[0] = 1.0, nx = 1.0;
  for (auto& v : x) v /= nx;

  bool converged = false;
  double rho = 0.0;
  for (long it = 0; it < max_iter && !converged; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double xi = x[i];
      for (std::int32_t nb : g.adj[sub[i]]) {
        const std::int32_t j = pos[nb];
        if (j >= 0) y[j] += xi;
      }
    }
    center(y);
    rho = dot(x, y);
    double resid = 0.0;
    for (std::size_t i = 0; i < m; ++i) resid = std::max(resid, std::fabs(y[i] - rho * x[i]));
    if (resid <= 1e-8 * std::max(1.0, std::fabs(rho))) {
      converged = true;
      break;
    }
    const double ny = norm2(y);
    if (ny <= 1e-300) {
      converged = true;  // empty spectrum; any centered vector qualifies
      break;
    }
    for (std::size_t i = 0; i < m; ++i) x[i] = y[i] / ny;
  }
  if (!converged) throw NoConvergence("spectral_partition: power iteration did not converge");

  // orient the two sign classes by revealed-neighbor majority
  long long vote[2][2] = {{0, 0}, {0, 0}};  // [side][label-1]
  for (std::size_t i = 0; i < m; ++i) {
    const int s = x[i] >= 0.0 ? 0 : 1;
    for (std::int32_t nb : g.adj[sub[i]]) {
      const int p = side.prior[nb];
      if (p == 1 || p == 2) ++vote[s][p - 1];
    }
  }
  const long long straight = vote[0][0] + vote[1][1];  // side0 -> 1, side1 -> 2
  const long long flipped = vote[0][1] + vote[1][0];
  int side0_label;
  if (straight > flipped) {
    side0_label = 1;
  } else if (flipped > straight) {
    side0_label = 2;
  } else {
    // tie: the larger side takes the majority revealed label
    long long n0 = 0;
    for (std::size_t i = 0; i < m; ++i) n0 += (x[i] >= 0.0);
    long long rev1 = 0, rev2 = 0;
    for (long long v = 0; v < g.n; ++v) {
      rev1 += (side.prior[v] == 1);
      rev2 += (side.prior[v] == 2);
    }
    const int major = rev1 >= rev2 ? 1 : 2;
    side0_label = (2 * n0 >= static_cast<long long>(m)) ? major : 3 - major;
  }
  for (std::size_t i = 0; i < m; ++i)
    labels[sub[i]] = (x[i] >= 0.0) ? side0_label : 3 - side0_label;
  return labels;
}

}  // namespace wmp
