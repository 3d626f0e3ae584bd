#pragma once
#include <vector>

#include "wmp/graph.hpp"
#include "wmp/model.hpp"
#include "wmp/tree.hpp"

namespace wmp {

struct PosteriorVector {
  Vec p;  // entries >= 0, sum to 1
};

// Nonlinear update f(x) = log((1 + t1 tanh(x/2)) / (1 - t2 tanh(x/2))) for
// t1, t2 in (0,1); f'(0) = (t1 + t2)/2.
double f_update(double theta1, double theta2, double x);

struct BpOptions {
  // Cross-check the k=2 logit recursion against sum-product and require
  // agreement within 1e-9. auto_check limits the check to small trees.
  enum class LogitCheck { off, on, auto_check } logit_check = LogitCheck::auto_check;
  Vec root_prior;  // default: stationary distribution of K
};

struct BpResult {
  PosteriorVector posterior;
  int label = 0;
  bool logit_checked = false;
  double logit_gap = 0.0;  // max posterior disagreement between the two routes
};

struct BpScratch {
  std::vector<double> m;  // upward messages
  std::vector<double> B;  // logit route
};

// Exact sum-product on the tree. Evidence sits on prior-carrying nodes and
// follows the noisy channel: likelihood delta + (1-delta)/k on the observed
// label and (1-delta)/k elsewhere (partial labels are mapped to the same
// effective channel).
BpResult bp_classify_root(const LocalTree& tree, const Mat& K, const SideInfoMode& mode,
                          const BpOptions& opts = {}, BpScratch* scratch = nullptr);

// Brute-force sum over all k^m hidden label assignments; m <= 14.
PosteriorVector exact_posterior_oracle(const LocalTree& tree, const Mat& K, double delta,
                                       const Vec& root_prior);

// Partial-mode k=2 baseline: sign split of the second eigenvector of the
// centered adjacency matrix of the unrevealed subgraph, oriented by
// majority agreement with revealed neighbors. Revealed nodes keep their
// labels.
std::vector<int> spectral_partition(const Graph& g, const SideInfo& side, long max_iter = 100000);

}  // namespace wmp
