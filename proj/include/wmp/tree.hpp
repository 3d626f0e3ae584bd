#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "wmp/graph.hpp"
#include "wmp/linalg.hpp"
#include "wmp/rng.hpp"

namespace wmp {

// Rooted tree in BFS order: node 0 is the root, children of a node are
// contiguous, layers are contiguous. This keeps the bottom-up passes
// (reverse index order) and top-down passes (forward order) branch-free.
struct LocalTree {
  int depth_cap = 0;
  std::vector<std::int32_t> parent;       // -1 at root
  std::vector<std::int32_t> first_child;  // size n+1; children of v are [first_child[v], first_child[v+1])
  std::vector<std::int16_t> depth;
  std::vector<std::int32_t> layer_begin;  // size max_depth+2; layer d is [layer_begin[d], layer_begin[d+1])
  std::vector<std::int8_t> label;         // true labels 1..k, 0 = none
  std::vector<std::int8_t> prior;         // side-information labels, 0 = none
  std::vector<std::int32_t> graph_node;   // original graph node, -1 for sampled trees
  std::vector<std::int32_t> boundary;     // flow sinks / initialization sites
  long long dropped_edges = 0;            // cycle edges seen and dropped by the BFS

  std::size_t size() const { return label.size(); }
  int max_depth() const { return static_cast<int>(layer_begin.size()) - 2; }
  int depth_of(std::size_t v) const;  // layer lookup when the depth array is absent
  std::int32_t children_begin(std::size_t v) const { return first_child[v]; }
  std::int32_t children_end(std::size_t v) const { return first_child[v + 1]; }
  int n_children(std::size_t v) const { return first_child[v + 1] - first_child[v]; }

  void clear();
};

struct BfsScratch {
  std::vector<std::int32_t> mark;   // tree index per graph node, stamped
  std::vector<std::uint32_t> epoch;
  std::uint32_t now = 0;
};

// BFS tree of the given radius. Cycle/cross edges are dropped and counted;
// equal-depth claims go to the parent with the lowest graph node id. The
// boundary is the depth == depth_cap layer; all_leaves additionally admits
// shallower dead-end leaves (the root never qualifies).
LocalTree extract_tree(const Graph& g, long long root, int depth, const SideInfo* side = nullptr,
                       bool all_leaves = false);
void extract_tree_into(LocalTree& t, BfsScratch& scratch, const Graph& g, long long root,
                       int depth, const SideInfo* side = nullptr, bool all_leaves = false);

// Offspring distributions per parent type. For two types the per-parent
// joint (count of type-1, count of type-2) is tabulated as one alias table,
// so a node costs a single draw.
struct OffspringTables {
  int k = 0;
  std::vector<PoissonTable> per_type;  // k*k, row-major by parent type
  struct Joint {
    std::vector<double> cut;
    std::vector<int> alias;
    std::vector<std::uint32_t> pair;  // (c0 << 16) | c1 per cell

    std::uint32_t sample(Rng& rng) const {
      const double x = rng.next_double() * static_cast<double>(cut.size());
      std::size_t slot = static_cast<std::size_t>(x);
      if (slot >= cut.size()) slot = cut.size() - 1;
      const double frac = x - static_cast<double>(slot);
      return pair[frac < cut[slot] ? slot : static_cast<std::size_t>(alias[slot])];
    }
  };
  std::vector<Joint> joint2;  // one per parent type when k == 2
};

// Multi-type Galton-Watson tree: a node of type i spawns Poisson(M[i][j])
// children of type j. root_label 0 draws the root from the stationary
// distribution of K = diag(M 1)^{-1} M.
LocalTree sample_gw_tree(const Mat& M, int root_label, int depth, std::uint64_t seed,
                         std::size_t max_nodes = (1u << 26));
// light = true skips the parent and depth arrays (they stay empty); layer
// ranges and child ranges fully describe the shape, which is all the
// message-passing pipeline reads.
void sample_gw_tree_into(LocalTree& t, const OffspringTables& offspring,
                         const Vec& root_distribution, int root_label, int depth, Rng& rng,
                         std::size_t max_nodes = (1u << 26), bool light = false);
OffspringTables offspring_tables(const Mat& M);

// Top-down Markov relabeling of a fixed tree shape.
void broadcast_labels_inplace(LocalTree& t, const Mat& K, int root_label, std::uint64_t seed);
LocalTree broadcast_labels(LocalTree t, const Mat& K, int root_label, std::uint64_t seed);

// Stamp side information onto tree nodes from their true labels.
// boundary_only restricts generation to the current boundary set.
void reveal_priors(LocalTree& t, const SideInfoMode& mode, int k, std::uint64_t seed,
                   bool boundary_only);

// Replace the boundary by the revealed-node cutset closest to the root
// (first prior-carrying node on each root-to-leaf path).
void set_boundary_revealed_cutset(LocalTree& t);

// Truncated view: shrink depth_cap to d and recompute the default boundary.
// Only valid for d <= max_depth; node arrays are shared via prefix ranges.
void truncate_to_depth(const LocalTree& t, int d, LocalTree& out);

bool validate_tree(const LocalTree& t, std::string* why = nullptr);

std::string tree_to_text(const LocalTree& t);
std::string tree_to_dot(const LocalTree& t);

}  // namespace wmp
