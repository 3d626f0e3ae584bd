#include "wmp/message_passing.hpp"

#include <algorithm>
#include <cmath>

#include "wmp/errors.hpp"
#include "wmp/parallel.hpp"

namespace wmp {

double MessageState::log_divisor_at(int layer) const {
  double s = premul_log_div;
  for (std::size_t d = layer; d < layer_log_div.size(); ++d) s += layer_log_div[d];
  return s;
}

double MessageState::unscaled_msg(std::size_t v) const {
  return msg[v] * std::exp(log_divisor_at(tree->depth_of(v)));
}

double MessageState::mu_at(std::size_t v, int label) const {
  if (lazy_boundary && static_cast<std::int32_t>(v) >= init_lo)
    return delta_eff * std::fabs(msg[v]) * w[label - 1];
  return mu[v * k + (label - 1)];
}

double MessageState::sigma2_at(std::size_t v) const {
  if (lazy_boundary && static_cast<std::int32_t>(v) >= init_lo) {
    const double c = std::fabs(msg[v]);
    return c * c;
  }
  return sigma2[v];
}

double MessageState::unscaled_mu(std::size_t v, int label) const {
  return mu_at(v, label) * std::exp(log_divisor_at(tree->depth_of(v)));
}

namespace {

Vec pick_weights(const BroadcastKernel& kernel, const InitOptions& opts) {
  if (!opts.w_override.empty()) {
    if (opts.w_override.size() != static_cast<std::size_t>(kernel.k))
      throw DimensionMismatch("init_messages: weight override has wrong length");
    return opts.w_override;
  }
  if (kernel.k == 2) return {1.0, -1.0};  // sign convention
  if (!kernel.has_w)
    throw NotSymmetric("init_messages: kernel has no eigenvector weights (K not symmetric)");
  return kernel.w;
}

void rescale_layer(MessageState& st, int layer) {
  if (!st.rescale) {
    st.layer_log_div[layer] = 0.0;
    return;
  }
  const LocalTree& t = *st.tree;
  const std::int32_t lo = t.layer_begin[layer], hi = t.layer_begin[layer + 1];
  double m = 0.0;
  for (std::int32_t v = lo; v < hi; ++v) m = std::max(m, std::fabs(st.msg[v]));
  if (m <= 1.0) {
    st.layer_log_div[layer] = 0.0;
    return;
  }
  const double inv = 1.0 / m;
  const bool moments_here = !(st.lazy_boundary && lo >= st.init_lo);  // derived from msg there
  for (std::int32_t v = lo; v < hi; ++v) {
    st.msg[v] *= inv;
    if (moments_here) {
      st.sigma2[v] *= inv * inv;
      for (int l = 0; l < st.k; ++l) st.mu[static_cast<std::size_t>(v) * st.k + l] *= inv;
    }
  }
  st.layer_log_div[layer] = std::log(m);
}

}  // namespace

void init_messages_into(MessageState& st, const LocalTree& tree, const SideInfoMode& mode,
                        const FlowAssignment& flow, const BroadcastKernel& kernel,
                        const InitOptions& opts) {
  if (flow.flow.size() != tree.size()) throw DimensionMismatch("init_messages: flow/tree size");
  if (kernel.theta == 0.0) throw InvalidParams("init_messages: theta must be nonzero");
  if (tree.boundary.empty()) throw EmptyBoundary("init_messages: tree has no boundary");

  st.tree = &tree;
  st.k = kernel.k;
  st.theta = kernel.theta;
  st.rescale = opts.rescale;
  st.K = kernel.K;
  st.w = pick_weights(kernel, opts);
  st.community_sizes = kernel.community_sizes;

  const bool exact_labels =
      mode.kind == SideInfoKind::partial && opts.treatment == PartialTreatment::all_revealed;
  st.delta_eff = exact_labels ? 1.0 : mode.delta;

  const std::size_t n = tree.size();
  int deepest = 0;
  bool any_prior = false;
  if (tree.depth.empty()) {
    // light trees always carry the default deepest-layer boundary
    deepest = tree.depth_of(tree.boundary.back());
    for (std::int32_t u : tree.boundary)
      if (tree.prior[u] != 0) {
        any_prior = true;
        break;
      }
  } else {
    for (std::int32_t u : tree.boundary) {
      deepest = std::max(deepest, static_cast<int>(tree.depth[u]));
      if (tree.prior[u] != 0) any_prior = true;
    }
  }
  if (!any_prior) throw NoBoundaryLabels("init_messages: no boundary node carries a prior label");

  // When the sites are exactly the deepest layer, every other node is
  // written by propagate before anything reads it, so the arrays only need
  // resizing. Mixed-depth boundaries keep the explicit zero state.
  st.init_lo = tree.layer_begin[deepest];
  st.init_contiguous =
      deepest == tree.max_depth() &&
      static_cast<std::int32_t>(tree.boundary.size()) == tree.layer_begin[deepest + 1] - st.init_lo &&
      tree.boundary.front() == st.init_lo;
  st.lazy_boundary = st.init_contiguous && st.k == 2 && mode.kind == SideInfoKind::noisy &&
                     deepest >= 1 && st.w[0] == 1.0 && st.w[1] == -1.0;
  if (st.init_contiguous) {
    st.msg.resize(n);
    if (st.lazy_boundary) {
      // moments above the boundary layer suffice; the boundary layer is
      // reconstructed from msg
      st.mu.resize(static_cast<std::size_t>(st.init_lo) * st.k);
      st.sigma2.resize(st.init_lo);
    } else {
      st.mu.resize(n * st.k);
      st.sigma2.resize(n);
    }
    st.is_init.clear();
  } else {
    st.msg.assign(n, 0.0);
    st.mu.assign(n * st.k, 0.0);
    st.sigma2.assign(n, 0.0);
    st.is_init.assign(n, 0);
  }

  st.layer_log_div.assign(deepest + 1, 0.0);
  st.frontier = deepest - 1;

  double wmin = st.w[0], wmax = st.w[0];
  for (double v : st.w) {
    wmin = std::min(wmin, v);
    wmax = std::max(wmax, v);
  }
  const double half_gap = 0.5 * (wmax - wmin);

  // theta^{-2|u|} grows without bound, so stored values carry a uniform
  // theta^{2 deepest} premultiplier; classification is scale invariant.
  const double theta2 = st.theta * st.theta;
  std::vector<double> shrink(deepest + 1);  // theta^{2 (deepest - d)}
  shrink[deepest] = 1.0;
  for (int d = deepest; d-- > 0;) shrink[d] = shrink[d + 1] * theta2;
  st.premul_log_div = -2.0 * static_cast<double>(deepest) * std::log(std::fabs(st.theta));

  double layer_max = 0.0;
  if (st.lazy_boundary) {
    // contiguous deepest-layer boundary: shrink[deepest] == 1
    for (std::int32_t u : tree.boundary) {
      const double c = flow.flow[u];
      const int p = tree.prior[u];
      const double m = p == 1 ? c : (p == 2 ? -c : 0.0);
      st.msg[u] = m;
      layer_max = std::max(layer_max, std::fabs(m));
    }
  } else {
    for (std::int32_t u : tree.boundary) {
      const double c = shrink[tree.depth_of(u)] * flow.flow[u];
      if (!st.init_contiguous) st.is_init[u] = 1;
      const double m = tree.prior[u] != 0 ? c * st.w[tree.prior[u] - 1] : 0.0;
      st.msg[u] = m;
      layer_max = std::max(layer_max, std::fabs(m));
      for (int l = 0; l < st.k; ++l)
        st.mu[static_cast<std::size_t>(u) * st.k + l] = st.delta_eff * c * st.w[l];
      st.sigma2[u] = exact_labels ? 0.0 : (c * half_gap) * (c * half_gap);
    }
  }

  if (st.rescale && layer_max > 1.0) {
    rescale_layer(st, deepest);
  } else {
    st.layer_log_div[deepest] = 0.0;
  }
}

MessageState init_messages(const LocalTree& tree, const SideInfoMode& mode,
                           const FlowAssignment& flow, const BroadcastKernel& kernel,
                           const InitOptions& opts) {
  MessageState st;
  init_messages_into(st, tree, mode, flow, kernel, opts);
  return st;
}

bool propagate(MessageState& st) {
  if (st.frontier < 0) return false;
  const LocalTree& t = *st.tree;
  const int f = st.frontier;
  const int k = st.k;
  const double theta = st.theta;
  const double theta2 = theta * theta;

  // init sites at this layer were stored before the deeper rescales ran;
  // bring them onto the same scale as the freshly computed values
  double pending = 0.0;
  for (std::size_t d = f + 1; d < st.layer_log_div.size(); ++d) pending += st.layer_log_div[d];
  const double init_adjust = std::exp(-pending);
  auto is_site = [&](std::int32_t v) {
    return st.init_contiguous ? v >= st.init_lo : st.is_init[v] != 0;
  };

  const std::int32_t lo = t.layer_begin[f], hi = t.layer_begin[f + 1];
  if (k == 2) {
    const double k00 = st.K(0, 0), k01 = st.K(0, 1), k10 = st.K(1, 0), k11 = st.K(1, 1);
    const bool children_lazy = st.lazy_boundary && t.layer_begin[f + 1] >= st.init_lo;
    const double delta = st.delta_eff;
    for (std::int32_t v = lo; v < hi; ++v) {
      if (is_site(v)) {
        if (pending != 0.0) {
          st.msg[v] *= init_adjust;
          st.sigma2[v] *= init_adjust * init_adjust;
          st.mu[v * 2] *= init_adjust;
          st.mu[v * 2 + 1] *= init_adjust;
        }
        continue;
      }
      double m = 0.0, sig = 0.0, s0 = 0.0, s1 = 0.0;
      const std::int32_t ce = t.children_end(v);
      if (children_lazy) {
        // boundary moments are mu = (delta c, -delta c) and sigma2 = c^2
        // with c = |msg|; identical arithmetic to the stored route
        for (std::int32_t c = t.children_begin(v); c < ce; ++c) {
          const double mc = st.msg[c];
          m += mc;
          const double cc = std::fabs(mc);
          const double a = cc * delta;
          s0 += a;
          s1 += -a;
          sig += cc * cc + a * a;
        }
      } else {
        for (std::int32_t c = t.children_begin(v); c < ce; ++c) {
          m += st.msg[c];
          const double a = st.mu[c * 2], b = st.mu[c * 2 + 1];
          s0 += a;
          s1 += b;
          const double half = 0.5 * std::fabs(a - b);
          sig += st.sigma2[c] + half * half;
        }
      }
      st.msg[v] = theta * m;
      st.sigma2[v] = theta2 * sig;
      st.mu[v * 2] = theta * (k00 * s0 + k01 * s1);
      st.mu[v * 2 + 1] = theta * (k10 * s0 + k11 * s1);
    }
  } else {
    Vec musum(k);
    for (std::int32_t v = lo; v < hi; ++v) {
      if (is_site(v)) {
        if (pending != 0.0) {
          st.msg[v] *= init_adjust;
          st.sigma2[v] *= init_adjust * init_adjust;
          for (int l = 0; l < k; ++l) st.mu[static_cast<std::size_t>(v) * k + l] *= init_adjust;
        }
        continue;
      }
      double m = 0.0, sig = 0.0;
      std::fill(musum.begin(), musum.end(), 0.0);
      for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c) {
        m += st.msg[c];
        const double* mc = &st.mu[static_cast<std::size_t>(c) * k];
        double cmin = mc[0], cmax = mc[0];
        for (int l = 0; l < k; ++l) {
          musum[l] += mc[l];
          cmin = std::min(cmin, mc[l]);
          cmax = std::max(cmax, mc[l]);
        }
        const double half = 0.5 * (cmax - cmin);
        sig += st.sigma2[c] + half * half;
      }
      st.msg[v] = theta * m;
      st.sigma2[v] = theta2 * sig;
      double* mv = &st.mu[static_cast<std::size_t>(v) * k];
      for (int l = 0; l < k; ++l) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += st.K(l, j) * musum[j];
        mv[l] = theta * s;
      }
    }
  }
  rescale_layer(st, f);
  --st.frontier;
  return st.frontier >= 0;
}

void propagate_to_root(MessageState& st) {
  while (propagate(st)) {
  }
}

ClassifyOutcome classify_root(const MessageState& st) {
  const int k = st.k;
  const double m = st.msg[0];
  ClassifyOutcome out;

  double best = std::fabs(m - st.mu[0]);
  for (int l = 1; l < k; ++l) best = std::min(best, std::fabs(m - st.mu[l]));

  // exact ties break toward the larger community, then the lowest label
  int label = 0;
  double second = std::numeric_limits<double>::infinity();
  int n_tied = 0;
  for (int l = 0; l < k; ++l) {
    const double d = std::fabs(m - st.mu[l]);
    if (d == best) {
      ++n_tied;
      if (label == 0 || st.community_sizes[l] > st.community_sizes[label - 1]) label = l + 1;
    } else if (d < second) {
      second = d;
    }
  }
  out.label = label;
  out.tie = n_tied > 1;
  out.margin = std::isfinite(second) ? second - best : 0.0;
  if (k == 2) {
    const int positive = st.w[0] > st.w[1] ? 1 : 2;
    const int sign_label = (m > 0.0) ? positive : (m < 0.0 ? 3 - positive : out.label);
    out.sign_mismatch = (sign_label != out.label);
  }
  return out;
}

EvolveResult evolve_moments(const LocalTree& tree, const Mat& K, double theta,
                            const std::vector<Vec>& mu0, const Vec& sigma2_0,
                            const std::vector<std::int32_t>& init_nodes, bool rescale,
                            const FlowAssignment* eigen_flow, double eigen_delta,
                            const Vec* eigen_w) {
  const int k = static_cast<int>(K.rows);
  if (mu0.size() != init_nodes.size() || sigma2_0.size() != init_nodes.size())
    throw DimensionMismatch("evolve_moments: init arrays disagree");

  const std::size_t n = tree.size();
  std::vector<double> mu(n * k, 0.0), sigma2(n, 0.0);
  std::vector<char> is_init(n, 0);
  int deepest = 0;
  for (std::size_t i = 0; i < init_nodes.size(); ++i) {
    const std::int32_t u = init_nodes[i];
    if (mu0[i].size() != static_cast<std::size_t>(k))
      throw DimensionMismatch("evolve_moments: mu0 entry has wrong length");
    for (int l = 0; l < k; ++l) mu[static_cast<std::size_t>(u) * k + l] = mu0[i][l];
    sigma2[u] = sigma2_0[i];
    is_init[u] = 1;
    deepest = std::max(deepest, static_cast<int>(tree.depth[u]));
  }

  EvolveResult out;
  out.closed_form_checked = (eigen_flow != nullptr && eigen_w != nullptr);
  std::vector<double> layer_log_div(deepest + 1, 0.0);

  auto rescale_layer_local = [&](int layer) {
    if (!rescale) return;
    const std::int32_t lo = tree.layer_begin[layer], hi = tree.layer_begin[layer + 1];
    double mx = 0.0;
    for (std::int32_t v = lo; v < hi; ++v)
      for (int l = 0; l < k; ++l) mx = std::max(mx, std::fabs(mu[static_cast<std::size_t>(v) * k + l]));
    if (mx <= 1.0) return;
    const double inv = 1.0 / mx;
    for (std::int32_t v = lo; v < hi; ++v) {
      sigma2[v] *= inv * inv;
      for (int l = 0; l < k; ++l) mu[static_cast<std::size_t>(v) * k + l] *= inv;
    }
    layer_log_div[layer] = std::log(mx);
  };

  auto check_closed_form = [&](std::int32_t v, double log_div_here) {
    // mu_{t-|v|}(v) = delta * theta^{-2|v|} i*(v) w, compared at stored scale
    const double log_pow = -2.0 * static_cast<double>(tree.depth[v]) * std::log(std::fabs(theta));
    const double base = eigen_delta * eigen_flow->flow[v];
    for (int l = 0; l < k; ++l) {
      const double expected = base * (*eigen_w)[l] * std::exp(log_pow - log_div_here);
      const double got = mu[static_cast<std::size_t>(v) * k + l];
      if (std::fabs(got - expected) > 1e-8 * std::max(1.0, std::fabs(expected))) {
        ++out.closed_form_violations;
        break;
      }
    }
  };

  rescale_layer_local(deepest);

  Vec musum(k);
  for (int f = deepest - 1; f >= 0; --f) {
    double pending = 0.0;
    for (int d = f + 1; d <= deepest; ++d) pending += layer_log_div[d];
    const double init_adjust = std::exp(-pending);
    for (std::int32_t v = tree.layer_begin[f]; v < tree.layer_begin[f + 1]; ++v) {
      if (is_init[v]) {
        if (pending != 0.0) {
          sigma2[v] *= init_adjust * init_adjust;
          for (int l = 0; l < k; ++l) mu[static_cast<std::size_t>(v) * k + l] *= init_adjust;
        }
        continue;
      }
      double sig = 0.0;
      std::fill(musum.begin(), musum.end(), 0.0);
      for (std::int32_t c = tree.children_begin(v); c < tree.children_end(v); ++c) {
        const double* mc = &mu[static_cast<std::size_t>(c) * k];
        double cmin = mc[0], cmax = mc[0];
        for (int l = 0; l < k; ++l) {
          musum[l] += mc[l];
          cmin = std::min(cmin, mc[l]);
          cmax = std::max(cmax, mc[l]);
        }
        const double half = 0.5 * (cmax - cmin);
        sig += sigma2[c] + half * half;
      }
      sigma2[v] = theta * theta * sig;
      double* mv = &mu[static_cast<std::size_t>(v) * k];
      for (int l = 0; l < k; ++l) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += K(l, j) * musum[j];
        mv[l] = theta * s;
      }
    }
    rescale_layer_local(f);
    if (out.closed_form_checked) {
      double log_here = 0.0;
      for (int d = f; d <= deepest; ++d) log_here += layer_log_div[d];
      for (std::int32_t v = tree.layer_begin[f]; v < tree.layer_begin[f + 1]; ++v)
        if (!is_init[v]) check_closed_form(v, log_here);
    }
  }

  out.mu_root.assign(mu.begin(), mu.begin() + k);
  out.sigma2_root = sigma2[0];
  out.log_divisor = 0.0;
  for (int d = 0; d <= deepest; ++d) out.log_divisor += layer_log_div[d];
  return out;
}

namespace {

int fallback_label(const SideInfo& side, const BroadcastKernel& kernel, long long root) {
  if (side.prior[root] != 0) return side.prior[root];
  int best = 1;
  for (int l = 1; l < kernel.k; ++l)
    if (kernel.community_sizes[l] > kernel.community_sizes[best - 1]) best = l + 1;
  return best;
}

std::vector<std::vector<int>> equiv_or_singletons(const BroadcastKernel& kernel) {
  if (kernel.has_w && !kernel.equiv_sets.empty()) return kernel.equiv_sets;
  std::vector<std::vector<int>> out;
  for (int l = 1; l <= kernel.k; ++l) out.push_back({l});
  return out;
}

}  // namespace

std::vector<ClassificationResult> wmp_classify_graph(const Graph& g, const SideInfo& side,
                                                     const BroadcastKernel& kernel,
                                                     const ClassifyOptions& opts) {
  if (opts.depths.empty()) throw ConfigError("wmp_classify_graph: empty depth grid");
  for (std::size_t i = 0; i < opts.depths.size(); ++i) {
    if (opts.depths[i] < 1) throw ConfigError("wmp_classify_graph: depths must be >= 1");
    if (i > 0 && opts.depths[i] <= opts.depths[i - 1])
      throw ConfigError("wmp_classify_graph: depths must be ascending");
  }
  const int max_depth = opts.depths.back();
  const int nd = static_cast<int>(opts.depths.size());
  const double r = 1.0 / (kernel.theta * kernel.theta);
  const bool partial = side.mode.kind == SideInfoKind::partial;

  std::vector<ClassificationResult> results(nd);
  for (int di = 0; di < nd; ++di) {
    auto& res = results[di];
    res.depth = opts.depths[di];
    res.pred.assign(g.n, 0);
    res.margin.assign(g.n, 0.0);
    res.tie.assign(g.n, 0);
    res.uninformed.assign(g.n, 0);
    res.evaluated.assign(g.n, 1);
  }

  const int threads = resolve_threads(opts.threads);
  std::vector<std::vector<long long>> mismatch(threads, std::vector<long long>(nd, 0));

  parallel_blocks(static_cast<std::size_t>(g.n), threads, [&](int tid, std::size_t lo, std::size_t hi) {
    BfsScratch bfs;
    LocalTree full, sub;
    FlowAssignment flow;
    FlowScratch fws;
    MessageState st;
    InitOptions init_opts;
    init_opts.treatment = opts.treatment;

    for (std::size_t root = lo; root < hi; ++root) {
      extract_tree_into(full, bfs, g, static_cast<long long>(root), max_depth, &side,
                        opts.all_leaves_boundary);
      for (int di = 0; di < nd; ++di) {
        auto& res = results[di];
        const int d = opts.depths[di];
        LocalTree* T = &full;
        if (d != max_depth) {
          truncate_to_depth(full, d, sub);
          T = &sub;
        }
        if (partial && opts.treatment == PartialTreatment::all_revealed)
          set_boundary_revealed_cutset(*T);

        bool ok = !T->boundary.empty();
        if (ok) {
          try {
            if (opts.uniform_flow)
              flow = uniform_boundary_flow(*T, r);
            else
              min_energy_flow_into(flow, fws, *T, r);
            init_messages_into(st, *T, side.mode, flow, kernel, init_opts);
            propagate_to_root(st);
            const ClassifyOutcome c = classify_root(st);
            res.pred[root] = c.label;
            res.margin[root] = c.margin;
            res.tie[root] = c.tie;
            if (c.sign_mismatch) ++mismatch[tid][di];
          } catch (const NoBoundaryLabels&) {
            ok = false;
          }
        }
        if (!ok) {
          res.pred[root] = fallback_label(side, kernel, static_cast<long long>(root));
          res.uninformed[root] = 1;
        }
        if (opts.exclude_revealed && partial && side.prior[root] != 0) res.evaluated[root] = 0;
      }
    }
  });

  const bool have_truth = g.has_truth();
  const auto equiv = equiv_or_singletons(kernel);
  for (int di = 0; di < nd; ++di) {
    auto& res = results[di];
    for (int tid = 0; tid < threads; ++tid) res.sign_mismatch += mismatch[tid][di];
    if (have_truth) {
      res.stats = misclassification_stats(res.pred, g.truth, kernel.k, equiv, res.evaluated,
                                          res.uninformed);
      res.has_stats = true;
    }
  }
  return results;
}

}  // namespace wmp
