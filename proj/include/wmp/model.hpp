#pragma once
#include <cstdint>
#include <vector>

#include "wmp/linalg.hpp"

namespace wmp {

// Generative model parameters: n nodes split into k communities of sizes
// community_sizes, with symmetric connection probabilities Q.
struct SbmParams {
  long long n = 0;
  int k = 0;
  std::vector<long long> community_sizes;  // length k, entries >= 1, sums to n
  Mat Q;                                   // k x k, symmetric, entries in [0,1]

  SbmParams() = default;
  SbmParams(std::vector<long long> sizes, Mat q);

  long long community_offset(int c) const;  // first node (0-based) of community c (0-based)
};

enum class SideInfoKind { noisy, partial };

// Either noisy labels on every node (correct with prob delta + (1-delta)/k)
// or exact labels revealed independently with prob delta.
struct SideInfoMode {
  SideInfoKind kind = SideInfoKind::noisy;
  double delta = 0.0;  // in (0,1)

  static SideInfoMode noisy(double delta);
  static SideInfoMode partial(double delta);
};

// Quantities derived from (N, Q):
//   K = diag(QN)^{-1} Q diag(N)   row-stochastic broadcasting kernel
//   M = Q diag(N)                 Galton-Watson mean matrix
//   theta = lambda_2(K)           second eigenvalue by magnitude, signed
//   lambda = lambda_1(M), snr = lambda * theta^2
// w is the unit second right eigenvector of K (only when K is symmetric);
// equiv_sets partitions labels 1..k by equal coordinates of w.
struct BroadcastKernel {
  int k = 0;
  std::vector<double> community_sizes;
  Mat K;
  Mat M;
  double theta = 0.0;
  double lambda = 0.0;
  double snr = 0.0;
  bool has_w = false;
  bool w_absent_warning = false;  // set when K was too asymmetric for w
  Vec w;
  std::vector<std::vector<int>> equiv_sets;  // labels 1..k
  Vec stationary;                            // stationary distribution of K
};

BroadcastKernel build_kernel(const SbmParams& params);

// Both prefactor conventions for the k=2 closed form
//   c * ( (n1 Q11 - n2 Q12)/(n1 Q11 + n2 Q12) + (n2 Q22 - n1 Q21)/(n1 Q21 + n2 Q22) )
// with c = 1/4 and c = 1/2; the 1/2 variant equals lambda_2(K) and is what
// the algorithms consume.
struct ThetaBarK2 {
  double quarter;
  double half;
};
ThetaBarK2 theta_bar_closed_form_k2(const SbmParams& params);

struct SecondEig {
  Vec w;                                     // unit norm, orthogonal to 1
  std::vector<std::vector<int>> equiv_sets;  // labels 1..k grouped by equal w coords
  double value = 0.0;                        // associated eigenvalue
};

// Second eigenvector of a symmetric row-stochastic K via shifted power
// iteration with deflation of the all-ones direction. Coordinates equal
// within 1e-8 are snapped to their common value.
SecondEig second_eigvec(const Mat& K, long max_iter = 100000);

// Kernel quantities for a broadcasting process given only the mean matrix:
// K = diag(M 1)^{-1} M, lambda = lambda_1(M), theta = lambda_2(K). For
// k > 2 an asymmetric K is rejected (NotSymmetric). community_sizes holds
// the stationary proportions, which drive the classification tie-break.
BroadcastKernel kernel_from_mean_matrix(const Mat& M);

// Plug-in kernel estimate from revealed labels: empirical block densities
// on the revealed subgraph with +1 Laplace smoothing on pair counts.
struct Graph;
struct SideInfo;
BroadcastKernel estimate_kernel_from_revealed(const Graph& g, const SideInfo& side, int k);

}  // namespace wmp
