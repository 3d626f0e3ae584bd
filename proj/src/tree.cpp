#include "wmp/tree.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "wmp/errors.hpp"

namespace wmp {

int LocalTree::depth_of(std::size_t v) const {
  if (!depth.empty()) return depth[v];
  const auto it = std::upper_bound(layer_begin.begin(), layer_begin.end(),
                                   static_cast<std::int32_t>(v));
  return static_cast<int>(it - layer_begin.begin()) - 1;
}

void LocalTree::clear() {
  depth_cap = 0;
  parent.clear();
  first_child.clear();
  depth.clear();
  layer_begin.clear();
  label.clear();
  prior.clear();
  graph_node.clear();
  boundary.clear();
  dropped_edges = 0;
}

namespace {

void default_boundary(LocalTree& t, bool all_leaves) {
  t.boundary.clear();
  const int cap = t.depth_cap;
  if (static_cast<int>(t.layer_begin.size()) >= cap + 2) {
    for (std::int32_t v = t.layer_begin[cap]; v < t.layer_begin[cap + 1]; ++v)
      t.boundary.push_back(v);
  }
  if (all_leaves) {
    for (std::size_t v = 1; v < t.size(); ++v)
      if (t.n_children(v) == 0 && t.depth[v] < cap) t.boundary.push_back(static_cast<std::int32_t>(v));
    std::sort(t.boundary.begin(), t.boundary.end());
  }
}

}  // namespace

void extract_tree_into(LocalTree& t, BfsScratch& scratch, const Graph& g, long long root,
                       int depth, const SideInfo* side, bool all_leaves) {
  if (root < 0 || root >= g.n) throw InvalidParams("extract_tree: root not in graph");
  if (depth < 1) throw InvalidParams("extract_tree: depth must be >= 1");

  if (scratch.mark.size() != static_cast<std::size_t>(g.n)) {
    scratch.mark.assign(g.n, -1);
    scratch.epoch.assign(g.n, 0);
    scratch.now = 0;
  }
  ++scratch.now;
  if (scratch.now == 0) {  // epoch wrap
    std::fill(scratch.epoch.begin(), scratch.epoch.end(), 0);
    scratch.now = 1;
  }
  auto visited = [&](long long u) { return scratch.epoch[u] == scratch.now; };
  auto tree_index = [&](long long u) { return scratch.mark[u]; };

  t.clear();
  t.depth_cap = depth;
  auto push_node = [&](long long gnode, std::int32_t par, std::int16_t d) {
    const std::int32_t idx = static_cast<std::int32_t>(t.parent.size());
    t.parent.push_back(par);
    t.depth.push_back(d);
    t.label.push_back(static_cast<std::int8_t>(g.truth.empty() ? 0 : g.truth[gnode]));
    t.prior.push_back(side ? side->prior[gnode] : 0);
    t.graph_node.push_back(static_cast<std::int32_t>(gnode));
    scratch.epoch[gnode] = scratch.now;
    scratch.mark[gnode] = idx;
    return idx;
  };

  push_node(root, -1, 0);
  t.layer_begin = {0, 1};

  // (graph id, tree idx) of the current layer, processed in ascending graph
  // id so equal-depth claims go to the lowest-id parent
  std::vector<std::pair<std::int32_t, std::int32_t>> layer = {{static_cast<std::int32_t>(root), 0}};
  std::vector<std::pair<std::int32_t, std::int32_t>> claims;  // (parent tree idx, graph node)

  for (int d = 0; d < depth && !layer.empty(); ++d) {
    std::sort(layer.begin(), layer.end());
    claims.clear();
    for (const auto& [gu, tu] : layer) {
      const std::int32_t gparent =
          t.parent[tu] >= 0 ? t.graph_node[t.parent[tu]] : -1;
      for (std::int32_t gv : g.adj[gu]) {
        if (gv == gparent) continue;
        if (!visited(gv)) {
          scratch.epoch[gv] = scratch.now;
          scratch.mark[gv] = -2 - static_cast<std::int32_t>(claims.size());  // claimed, not yet placed
          claims.emplace_back(tu, gv);
        } else {
          const std::int32_t mv = tree_index(gv);
          // count each dropped edge exactly once
          if (mv <= -2) {
            ++t.dropped_edges;  // claimed this phase by an earlier parent
          } else {
            const int dv = t.depth[mv];
            if (dv == d && gu < gv) ++t.dropped_edges;
            // dv == d-1 (non-parent back edge) was counted when that layer ran
          }
        }
      }
    }
    if (claims.empty()) break;
    // place children grouped by parent in tree order
    std::stable_sort(claims.begin(), claims.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<std::int32_t, std::int32_t>> next;
    next.reserve(claims.size());
    for (const auto& [tu, gv] : claims) {
      const std::int32_t idx = push_node(gv, tu, static_cast<std::int16_t>(d + 1));
      next.emplace_back(gv, idx);
    }
    t.layer_begin.push_back(static_cast<std::int32_t>(t.parent.size()));
    layer.swap(next);
  }

  // first_child from child counts: children are contiguous in BFS order,
  // and node 0's children start at index 1
  const std::size_t n = t.size();
  t.first_child.assign(n + 1, 0);
  t.first_child[0] = 1;
  std::vector<std::int32_t> cnt(n, 0);
  for (std::size_t v = 1; v < n; ++v) ++cnt[t.parent[v]];
  for (std::size_t v = 0; v < n; ++v)
    t.first_child[v + 1] = t.first_child[v] + cnt[v];

  default_boundary(t, all_leaves);
}

LocalTree extract_tree(const Graph& g, long long root, int depth, const SideInfo* side,
                       bool all_leaves) {
  LocalTree t;
  BfsScratch scratch;
  extract_tree_into(t, scratch, g, root, depth, side, all_leaves);
  return t;
}

namespace {

std::vector<double> poisson_pmf(double mean) {
  std::vector<double> probs;
  if (mean <= 0.0) {
    probs.push_back(1.0);
    return probs;
  }
  double p = std::exp(-mean);
  double cum = p;
  probs.push_back(p);
  std::size_t j = 0;
  const std::size_t cap = static_cast<std::size_t>(mean + 20.0 * std::sqrt(mean) + 64.0);
  while (cum < 1.0 - 1e-15 && j < cap) {
    ++j;
    p *= mean / static_cast<double>(j);
    cum += p;
    probs.push_back(p);
  }
  std::size_t heaviest = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[heaviest]) heaviest = i;
  probs[heaviest] += 1.0 - cum;
  return probs;
}

OffspringTables::Joint build_joint(double mean0, double mean1) {
  const std::vector<double> p0 = poisson_pmf(mean0);
  const std::vector<double> p1 = poisson_pmf(mean1);
  const std::size_t m = p0.size() * p1.size();
  std::vector<double> probs(m);
  OffspringTables::Joint joint;
  joint.pair.resize(m);
  for (std::size_t i = 0; i < p0.size(); ++i)
    for (std::size_t j = 0; j < p1.size(); ++j) {
      probs[i * p1.size() + j] = p0[i] * p1[j];
      joint.pair[i * p1.size() + j] =
          (static_cast<std::uint32_t>(i) << 16) | static_cast<std::uint32_t>(j);
    }
  // Vose alias construction
  joint.cut.assign(m, 1.0);
  joint.alias.assign(m, 0);
  std::vector<double> scaled(m);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < m; ++i) {
    scaled[i] = probs[i] * static_cast<double>(m);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    const std::size_t g = large.back();
    small.pop_back();
    joint.cut[s] = scaled[s];
    joint.alias[s] = static_cast<int>(g);
    scaled[g] -= 1.0 - scaled[s];
    if (scaled[g] < 1.0) {
      large.pop_back();
      small.push_back(g);
    }
  }
  return joint;
}

}  // namespace

OffspringTables offspring_tables(const Mat& M) {
  OffspringTables tables;
  tables.k = static_cast<int>(M.rows);
  tables.per_type.reserve(M.rows * M.cols);
  for (std::size_t i = 0; i < M.rows; ++i)
    for (std::size_t j = 0; j < M.cols; ++j) {
      if (M(i, j) < 0.0) throw InvalidParams("offspring_tables: mean matrix must be nonnegative");
      tables.per_type.emplace_back(M(i, j));
    }
  if (tables.k == 2) {
    tables.joint2.push_back(build_joint(M(0, 0), M(0, 1)));
    tables.joint2.push_back(build_joint(M(1, 0), M(1, 1)));
  }
  return tables;
}

void sample_gw_tree_into(LocalTree& t, const OffspringTables& offspring,
                         const Vec& root_distribution, int root_label, int depth, Rng& rng,
                         std::size_t max_nodes, bool light) {
  const int k = static_cast<int>(root_distribution.size());
  if (offspring.k != k || static_cast<int>(offspring.per_type.size()) != k * k)
    throw DimensionMismatch("sample_gw_tree: offspring table shape");
  const bool joint2 = k == 2 && offspring.joint2.size() == 2;
  if (depth < 0) throw InvalidParams("sample_gw_tree: negative depth");
  if (k > 64) throw InvalidParams("sample_gw_tree: too many types");

  int rl = root_label;
  if (rl == 0) {
    const double u = rng.next_double();
    double cum = 0.0;
    rl = k;
    for (int j = 0; j < k; ++j) {
      cum += root_distribution[j];
      if (u < cum) {
        rl = j + 1;
        break;
      }
    }
  }

  // the node arrays stay at their high-water size across calls and are
  // trimmed once at the end; everything in [0, sz) is overwritten here
  t.depth_cap = depth;
  t.layer_begin.clear();
  t.boundary.clear();
  t.graph_node.clear();  // not backed by a graph
  t.dropped_edges = 0;

  std::size_t storage = std::min(t.label.size(), t.first_child.size());
  if (!light) {
    storage = std::min(storage, t.parent.size());
    storage = std::min(storage, t.depth.size());
  }
  std::int32_t* par = nullptr;
  std::int16_t* dep = nullptr;
  std::int8_t* lab = nullptr;
  std::int32_t* fch = nullptr;
  auto refresh = [&] {
    lab = t.label.data();
    fch = t.first_child.data();
    if (!light) {
      par = t.parent.data();
      dep = t.depth.data();
    }
  };
  auto grow = [&](std::size_t need) {
    const std::size_t target = std::max<std::size_t>({need, 2 * storage, 4096});
    t.label.resize(target);
    t.first_child.resize(target);
    if (!light) {
      t.parent.resize(target);
      t.depth.resize(target);
    }
    storage = target;
    refresh();
  };
  if (storage == 0) grow(4096); else refresh();
  if (light) {
    t.parent.clear();
    t.depth.clear();
  }

  std::size_t sz = 0;
  if (!light) {
    par[0] = -1;
    dep[0] = 0;
  }
  lab[0] = rl;
  sz = 1;
  t.layer_begin = {0, 1};

  int counts[64];
  std::size_t begin = 0, end = 1;
  for (int d = 0; d < depth && begin < end; ++d) {
    for (std::size_t v = begin; v < end; ++v) {
      fch[v] = static_cast<std::int32_t>(sz);
      const int li = lab[v] - 1;
      std::size_t total = 0;
      if (joint2) {
        const std::uint32_t pair = offspring.joint2[li].sample(rng);
        counts[0] = static_cast<int>(pair >> 16);
        counts[1] = static_cast<int>(pair & 0xffffu);
        total = static_cast<std::size_t>(counts[0]) + counts[1];
      } else {
        for (int j = 0; j < k; ++j) total += counts[j] = offspring.per_type[li * k + j].sample(rng);
      }
      if (total == 0) continue;
      if (sz + total + 1 > storage) {
        if (sz + total > max_nodes) throw TooLarge("sample_gw_tree: node cap exceeded");
        grow(sz + total + 1);
      }
      for (int j = 0; j < k; ++j)
        for (int s = 0; s < counts[j]; ++s) lab[sz++] = static_cast<std::int8_t>(j + 1);
      if (!light) {
        sz -= total;
        for (std::size_t s = 0; s < total; ++s) {
          par[sz] = static_cast<std::int32_t>(v);
          dep[sz] = static_cast<std::int16_t>(d + 1);
          ++sz;
        }
      }
      if (sz > max_nodes) throw TooLarge("sample_gw_tree: node cap exceeded");
    }
    begin = end;
    end = sz;
    if (end > begin) t.layer_begin.push_back(static_cast<std::int32_t>(end));
  }
  // nodes in the last layer have no children
  for (std::size_t v = begin; v < end; ++v) fch[v] = static_cast<std::int32_t>(sz);
  fch[sz] = static_cast<std::int32_t>(sz);  // sentinel slot was reserved by grow()

  if (!light) {
    t.parent.resize(sz);
    t.depth.resize(sz);
  }
  t.label.resize(sz);
  t.first_child.resize(sz + 1);
  t.prior.assign(sz, 0);

  if (depth == 0) {
    t.boundary = {0};  // degenerate: the root is its own sink
  } else {
    default_boundary(t, false);
  }
}

LocalTree sample_gw_tree(const Mat& M, int root_label, int depth, std::uint64_t seed,
                         std::size_t max_nodes) {
  const int k = static_cast<int>(M.rows);
  Vec stationary;
  if (root_label == 0) {
    Mat K(k, k);
    for (int i = 0; i < k; ++i) {
      double rs = 0.0;
      for (int j = 0; j < k; ++j) rs += M(i, j);
      if (rs == 0.0) throw ZeroDegreeCommunity("sample_gw_tree: zero row in mean matrix");
      for (int j = 0; j < k; ++j) K(i, j) = M(i, j) / rs;
    }
    stationary = stationary_distribution(K);
  } else {
    stationary.assign(k, 0.0);
    stationary[root_label - 1] = 1.0;
  }
  LocalTree t;
  Rng rng(hash_combine(seed, 0x677754ULL));
  sample_gw_tree_into(t, offspring_tables(M), stationary, root_label, depth, rng, max_nodes);
  return t;
}

void broadcast_labels_inplace(LocalTree& t, const Mat& K, int root_label, std::uint64_t seed) {
  const int k = static_cast<int>(K.rows);
  Rng rng(hash_combine(seed, 0xb40adca57ULL));
  t.label[0] = static_cast<std::int8_t>(root_label);
  for (std::size_t v = 0; v < t.size(); ++v) {
    const int li = t.label[v] - 1;
    for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c) {
      const double u = rng.next_double();
      double cum = 0.0;
      int lab = k;
      for (int j = 0; j < k; ++j) {
        cum += K(li, j);
        if (u < cum) {
          lab = j + 1;
          break;
        }
      }
      t.label[c] = static_cast<std::int8_t>(lab);
    }
  }
}

LocalTree broadcast_labels(LocalTree t, const Mat& K, int root_label, std::uint64_t seed) {
  broadcast_labels_inplace(t, K, root_label, seed);
  return t;
}

void reveal_priors(LocalTree& t, const SideInfoMode& mode, int k, std::uint64_t seed,
                   bool boundary_only) {
  const double keep = mode.delta + (1.0 - mode.delta) / static_cast<double>(k);
  auto stamp = [&](std::size_t v) {
    const int truth = t.label[v];
    const double u = keyed_uniform1(seed, v);
    if (mode.kind == SideInfoKind::partial) {
      t.prior[v] = static_cast<std::int8_t>((u < mode.delta) ? truth : 0);
    } else {
      if (u < keep) {
        t.prior[v] = static_cast<std::int8_t>(truth);
      } else {
        // conditional on the miss, (u - keep)/(1 - keep) is uniform again
        const double u2 = (u - keep) / (1.0 - keep);
        int wrong = static_cast<int>(u2 * (k - 1));
        if (wrong >= k - 1) wrong = k - 2;
        t.prior[v] = static_cast<std::int8_t>((wrong + 1 <= truth - 1) ? wrong + 1 : wrong + 2);
      }
    }
  };
  if (boundary_only) {
    // every boundary node gets stamped below, so when the boundary is the
    // whole deepest layer only the prefix needs clearing
    const int d = t.max_depth();
    const bool deepest_layer =
        !t.boundary.empty() &&
        static_cast<std::int32_t>(t.boundary.size()) == t.layer_begin[d + 1] - t.layer_begin[d] &&
        t.boundary.front() == t.layer_begin[d];
    if (deepest_layer) {
      std::fill(t.prior.begin(), t.prior.begin() + t.layer_begin[d], 0);
    } else {
      std::fill(t.prior.begin(), t.prior.end(), 0);
    }
    for (std::int32_t v : t.boundary) stamp(v);
  } else {
    for (std::size_t v = 0; v < t.size(); ++v) stamp(v);
  }
}

void set_boundary_revealed_cutset(LocalTree& t) {
  t.boundary.clear();
  std::vector<char> blocked(t.size(), 0);
  for (std::size_t v = 0; v < t.size(); ++v) {
    if (t.parent[v] >= 0 && blocked[t.parent[v]]) {
      blocked[v] = 1;
      continue;
    }
    if (t.prior[v] != 0) {
      t.boundary.push_back(static_cast<std::int32_t>(v));
      blocked[v] = 1;
    }
  }
}

void truncate_to_depth(const LocalTree& t, int d, LocalTree& out) {
  if (d < 0 || d > t.depth_cap) throw InvalidParams("truncate_to_depth: depth out of range");
  if (d > t.max_depth()) {
    // the tree never reached this radius; the whole tree is the ball, and
    // there are no nodes at the requested boundary depth
    out = t;
    out.depth_cap = d;
    default_boundary(out, false);
    return;
  }
  const std::int32_t n = t.layer_begin[d + 1];
  out.clear();
  out.depth_cap = d;
  if (t.parent.empty()) out.parent.clear();
  else out.parent.assign(t.parent.begin(), t.parent.begin() + n);
  if (t.depth.empty()) out.depth.clear();
  else out.depth.assign(t.depth.begin(), t.depth.begin() + n);
  out.label.assign(t.label.begin(), t.label.begin() + n);
  out.prior.assign(t.prior.begin(), t.prior.begin() + n);
  if (!t.graph_node.empty())
    out.graph_node.assign(t.graph_node.begin(), t.graph_node.begin() + n);
  out.layer_begin.assign(t.layer_begin.begin(), t.layer_begin.begin() + d + 2);
  out.first_child.resize(n + 1);
  for (std::int32_t v = 0; v <= n; ++v)
    out.first_child[v] = std::min(v < n ? t.first_child[v] : n, n);
  out.dropped_edges = 0;
  default_boundary(out, false);
}

bool validate_tree(const LocalTree& t, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const std::size_t n = t.size();
  if (n == 0) return fail("empty tree");
  if (t.parent.size() != n || t.depth.size() != n)
    return fail("parent/depth arrays absent (light tree)");
  if (t.parent[0] != -1 || t.depth[0] != 0) return fail("bad root");
  if (t.first_child.size() != n + 1) return fail("first_child size");
  for (std::size_t v = 0; v < n; ++v) {
    if (t.first_child[v] > t.first_child[v + 1]) return fail("first_child not monotone");
    for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c) {
      if (t.parent[c] != static_cast<std::int32_t>(v)) return fail("child/parent mismatch");
      if (t.depth[c] != t.depth[v] + 1) return fail("child depth");
    }
    if (v > 0) {
      if (t.parent[v] < 0 || t.parent[v] >= static_cast<std::int32_t>(v))
        return fail("parent must precede child");
      if (t.depth[v] > t.depth_cap) return fail("depth beyond cap");
    }
  }
  // every non-root must be inside its parent's child range
  for (std::size_t v = 1; v < n; ++v) {
    const std::int32_t p = t.parent[v];
    if (!(t.children_begin(p) <= static_cast<std::int32_t>(v) &&
          static_cast<std::int32_t>(v) < t.children_end(p)))
      return fail("child outside parent range");
  }
  // boundary: valid, sorted, antichain
  std::vector<char> is_b(n, 0);
  for (std::size_t i = 0; i < t.boundary.size(); ++i) {
    const std::int32_t v = t.boundary[i];
    if (v < 0 || v >= static_cast<std::int32_t>(n)) return fail("boundary out of range");
    if (i > 0 && t.boundary[i - 1] >= v) return fail("boundary not sorted/unique");
    is_b[v] = 1;
  }
  for (std::int32_t v : t.boundary) {
    std::int32_t u = t.parent[v];
    while (u >= 0) {
      if (is_b[u]) return fail("boundary not an antichain");
      u = t.parent[u];
    }
  }
  return true;
}

std::string tree_to_text(const LocalTree& t) {
  std::ostringstream out;
  std::vector<char> is_b(t.size(), 0);
  for (std::int32_t v : t.boundary) is_b[v] = 1;
  // depth-first walk for readability
  std::vector<std::int32_t> stack = {0};
  std::vector<std::int32_t> order;
  while (!stack.empty()) {
    const std::int32_t v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (std::int32_t c = t.children_end(v) - 1; c >= t.children_begin(v); --c) stack.push_back(c);
  }
  for (std::int32_t v : order) {
    for (int i = 0; i < t.depth[v]; ++i) out << "  ";
    out << "#" << v;
    if (!t.graph_node.empty() && t.graph_node[v] >= 0) out << " (g" << t.graph_node[v] << ")";
    if (t.label[v]) out << " label=" << t.label[v];
    if (t.prior[v]) out << " prior=" << t.prior[v];
    if (is_b[v]) out << " [boundary]";
    out << "\n";
  }
  return out.str();
}

std::string tree_to_dot(const LocalTree& t) {
  std::ostringstream out;
  std::vector<char> is_b(t.size(), 0);
  for (std::int32_t v : t.boundary) is_b[v] = 1;
  out << "digraph tree {\n";
  for (std::size_t v = 0; v < t.size(); ++v) {
    out << "  n" << v << " [label=\"" << v;
    if (t.label[v]) out << "\\nl=" << t.label[v];
    if (t.prior[v]) out << "\\np=" << t.prior[v];
    out << "\"";
    if (is_b[v]) out << ", shape=box";
    out << "];\n";
    if (t.parent[v] >= 0) out << "  n" << t.parent[v] << " -> n" << v << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace wmp
