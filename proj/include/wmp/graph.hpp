#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "wmp/model.hpp"

namespace wmp {

// Undirected simple graph; nodes are 0-based internally, 1..n in files.
struct Graph {
  long long n = 0;
  std::vector<std::vector<std::int32_t>> adj;  // sorted neighbor lists
  std::vector<int> truth;                      // labels 1..k, 0 = unknown
  std::vector<long long> orig_id;              // external ids

  long long edge_count() const;
  bool has_truth() const;
};

struct SideInfo {
  SideInfoMode mode;
  std::vector<int> prior;  // labels 1..k, 0 = unrevealed (partial mode only)
  std::uint64_t seed = 0;
};

// Labels filled block-wise to the exact community sizes (nodes 0..N1-1 get
// label 1, ...), every unordered pair sampled independently. Per-pair draws
// are keyed by (seed, u, v); sparse blocks (Q_ij <= 0.01) use an expected
// O(m) geometric skip sampler instead.
Graph sample_graph(const SbmParams& params, std::uint64_t seed);

SideInfo make_side_info(const std::vector<int>& truth, const SideInfoMode& mode, int k,
                        std::uint64_t seed);

// Loaders. Direction is ignored, duplicate edges and self-loops dropped.
Graph load_edge_list(const std::string& path);
Graph load_gml(const std::string& path);
void attach_labels(Graph& g, const std::string& path);
Graph restrict_to_largest_component(const Graph& g);

}  // namespace wmp
