#include "wmp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wmp/errors.hpp"
#include "wmp/graph.hpp"

namespace wmp {

SbmParams::SbmParams(std::vector<long long> sizes, Mat q)
    : community_sizes(std::move(sizes)), Q(std::move(q)) {
  k = static_cast<int>(community_sizes.size());
  if (k < 1) throw InvalidParams("SbmParams: need at least one community");
  if (Q.rows != static_cast<std::size_t>(k) || Q.cols != static_cast<std::size_t>(k))
    throw InvalidParams("SbmParams: Q must be k x k");
  n = 0;
  for (long long s : community_sizes) {
    if (s <= 0) throw InvalidParams("SbmParams: community sizes must be positive");
    n += s;
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double v = Q(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidParams("SbmParams: Q entries must lie in [0,1]");
      if (Q(i, j) != Q(j, i)) throw InvalidParams("SbmParams: Q must be symmetric");
    }
}

long long SbmParams::community_offset(int c) const {
  long long off = 0;
  for (int i = 0; i < c; ++i) off += community_sizes[i];
  return off;
}

SideInfoMode SideInfoMode::noisy(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParams("SideInfoMode: delta must be in (0,1)");
  return {SideInfoKind::noisy, delta};
}

SideInfoMode SideInfoMode::partial(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidParams("SideInfoMode: delta must be in (0,1)");
  return {SideInfoKind::partial, delta};
}

namespace {

// Group labels whose w coordinates agree within tol, then snap each group
// to its mean value so downstream comparisons see exact ties.
std::vector<std::vector<int>> group_equal_coords(Vec& w, double tol) {
  const int k = static_cast<int>(w.size());
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return w[i] < w[j]; });

  std::vector<std::vector<int>> groups;
  for (int idx = 0; idx < k; ++idx) {
    const int lab = order[idx];
    if (!groups.empty() && std::fabs(w[lab] - w[order[idx - 1]]) <= tol) {
      groups.back().push_back(lab + 1);
    } else {
      groups.push_back({lab + 1});
    }
  }
  for (auto& g : groups) {
    double mean = 0.0;
    for (int lab : g) mean += w[lab - 1];
    mean /= static_cast<double>(g.size());
    for (int lab : g) w[lab - 1] = mean;
    std::sort(g.begin(), g.end());
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return groups;
}

void orient_and_normalize(Vec& w) {
  double n2 = norm2(w);
  if (n2 > 0.0)
    for (auto& v : w) v /= n2;
  for (double v : w) {
    if (std::fabs(v) > 1e-12) {
      if (v < 0.0)
        for (auto& x : w) x = -x;
      break;
    }
  }
}

}  // namespace

BroadcastKernel build_kernel(const SbmParams& params) {
  const int k = params.k;
  BroadcastKernel ker;
  ker.k = k;
  ker.community_sizes.assign(params.community_sizes.begin(), params.community_sizes.end());

  // D = QN (expected degree by community, up to the n scaling)
  Vec D(k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) D[i] += params.Q(i, j) * ker.community_sizes[j];
    if (D[i] == 0.0) throw ZeroDegreeCommunity("build_kernel: community " + std::to_string(i + 1) +
                                               " has zero expected degree");
  }

  ker.K = Mat(k, k);
  ker.M = Mat(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      ker.M(i, j) = params.Q(i, j) * ker.community_sizes[j];
      ker.K(i, j) = ker.M(i, j) / D[i];
    }
  for (int i = 0; i < k; ++i) {
    double rs = 0.0;
    for (int j = 0; j < k; ++j) rs += ker.K(i, j);
    if (std::fabs(rs - 1.0) > 1e-9) throw NonStochastic("build_kernel: row sum off by more than 1e-9");
  }

  // K and M are similar to symmetric matrices because Q is symmetric:
  //   S_K[i][j] = Q_ij sqrt(N_i N_j) / sqrt(D_i D_j)
  //   S_M[i][j] = sqrt(N_i) Q_ij sqrt(N_j)
  // so their spectra are real and a symmetric eigensolver applies.
  Mat SK(k, k), SM(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double ni = ker.community_sizes[i], nj = ker.community_sizes[j];
      SK(i, j) = params.Q(i, j) * std::sqrt(ni * nj) / std::sqrt(D[i] * D[j]);
      SM(i, j) = std::sqrt(ni) * params.Q(i, j) * std::sqrt(nj);
    }

  EigenSym ek = jacobi_sym(SK);
  EigenSym em = jacobi_sym(SM);

  std::vector<double> by_abs = ek.values;
  std::sort(by_abs.begin(), by_abs.end(), [](double a, double b) {
    if (std::fabs(a) != std::fabs(b)) return std::fabs(a) > std::fabs(b);
    return a > b;
  });
  ker.theta = (k >= 2) ? by_abs[1] : 0.0;
  ker.lambda = *std::max_element(em.values.begin(), em.values.end());
  ker.snr = ker.lambda * ker.theta * ker.theta;
  ker.stationary = stationary_distribution(ker.K);

  if (is_symmetric(ker.K, 1e-9) && k >= 2) {
    SecondEig se = second_eigvec(ker.K);
    ker.w = se.w;
    ker.equiv_sets = se.equiv_sets;
    ker.has_w = true;
  } else {
    ker.w_absent_warning = true;
  }
  return ker;
}

ThetaBarK2 theta_bar_closed_form_k2(const SbmParams& params) {
  if (params.k != 2) throw WrongK("theta_bar_closed_form_k2: requires k == 2");
  const double n1 = static_cast<double>(params.community_sizes[0]);
  const double n2 = static_cast<double>(params.community_sizes[1]);
  const double d1 = n1 * params.Q(0, 0) + n2 * params.Q(0, 1);
  const double d2 = n1 * params.Q(1, 0) + n2 * params.Q(1, 1);
  if (d1 <= 0.0 || d2 <= 0.0)
    throw ZeroDegreeCommunity("theta_bar_closed_form_k2: zero denominator");
  const double sum = (n1 * params.Q(0, 0) - n2 * params.Q(0, 1)) / d1 +
                     (n2 * params.Q(1, 1) - n1 * params.Q(1, 0)) / d2;
  return {sum / 4.0, sum / 2.0};
}

SecondEig second_eigvec(const Mat& K, long max_iter) {
  if (K.rows != K.cols) throw DimensionMismatch("second_eigvec: matrix not square");
  const int k = static_cast<int>(K.rows);
  if (k < 2) throw WrongK("second_eigvec: requires k >= 2");
  if (!is_symmetric(K, 1e-9)) throw NotSymmetric("second_eigvec: K not symmetric within 1e-9");

  Mat S(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) S(i, j) = 0.5 * (K(i, j) + K(j, i));

  Vec ones(k, 1.0 / std::sqrt(static_cast<double>(k)));
  const std::vector<Vec> deflate{ones};

  // Shifted runs to pick up the extreme eigenvalues on both ends of the
  // spectrum without +/- magnitude ties stalling the iteration.
  const double shift = 1.5;
  Mat plus = S, minus(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) minus(i, j) = -S(i, j);
    plus(i, i) += shift;
    minus(i, i) += shift;
  }
  auto [rho_hi, v_hi] = power_iteration(plus, deflate, 1e-10, max_iter);
  auto [rho_lo, v_lo] = power_iteration(minus, deflate, 1e-10, max_iter);
  const double theta_hi = rho_hi - shift;   // most positive eigenvalue off the 1-direction
  const double theta_lo = shift - rho_lo;   // most negative

  SecondEig out;
  if (std::fabs(theta_hi) >= std::fabs(theta_lo)) {
    out.value = theta_hi;
    out.w = v_hi;
  } else {
    out.value = theta_lo;
    out.w = v_lo;
  }

  // strip any all-ones residue, normalize, orient deterministically
  const double c = dot(out.w, ones);
  for (int i = 0; i < k; ++i) out.w[i] -= c * ones[i];
  orient_and_normalize(out.w);
  out.equiv_sets = group_equal_coords(out.w, 1e-8);
  orient_and_normalize(out.w);

  Vec Kw = mat_vec(K, out.w);
  double resid = 0.0;
  for (int i = 0; i < k; ++i) resid = std::max(resid, std::fabs(Kw[i] - out.value * out.w[i]));
  if (resid > 1e-8) throw NoConvergence("second_eigvec: residual above 1e-8 after snapping");
  return out;
}

BroadcastKernel kernel_from_mean_matrix(const Mat& M) {
  if (M.rows != M.cols || M.rows < 1) throw DimensionMismatch("kernel_from_mean_matrix: M not square");
  const int k = static_cast<int>(M.rows);
  BroadcastKernel ker;
  ker.k = k;
  ker.M = M;
  ker.K = Mat(k, k);
  for (int i = 0; i < k; ++i) {
    double rs = 0.0;
    for (int j = 0; j < k; ++j) {
      if (M(i, j) < 0.0) throw InvalidParams("kernel_from_mean_matrix: negative mean entry");
      rs += M(i, j);
    }
    if (rs == 0.0) throw ZeroDegreeCommunity("kernel_from_mean_matrix: zero row in M");
    for (int j = 0; j < k; ++j) ker.K(i, j) = M(i, j) / rs;
  }

  if (is_symmetric(ker.M, 1e-12)) {
    EigenSym em = jacobi_sym(ker.M);
    ker.lambda = *std::max_element(em.values.begin(), em.values.end());
  } else {
    auto [lam, lvec] = power_iteration(ker.M, {});
    (void)lvec;
    ker.lambda = lam;
  }

  if (k == 2) {
    const auto ev = eigvals_2x2(ker.K(0, 0), ker.K(0, 1), ker.K(1, 0), ker.K(1, 1));
    ker.theta = ev[1];
  } else if (is_symmetric(ker.K, 1e-9)) {
    EigenSym ek = jacobi_sym(ker.K);
    std::vector<double> by_abs = ek.values;
    std::sort(by_abs.begin(), by_abs.end(), [](double a, double b) {
      if (std::fabs(a) != std::fabs(b)) return std::fabs(a) > std::fabs(b);
      return a > b;
    });
    ker.theta = by_abs[1];
  } else {
    throw NotSymmetric("kernel_from_mean_matrix: k > 2 requires a symmetric K");
  }
  ker.snr = ker.lambda * ker.theta * ker.theta;
  ker.stationary = stationary_distribution(ker.K);
  ker.community_sizes = ker.stationary;

  if (k >= 2 && is_symmetric(ker.K, 1e-9)) {
    SecondEig se = second_eigvec(ker.K);
    ker.w = se.w;
    ker.equiv_sets = se.equiv_sets;
    ker.has_w = true;
  } else {
    ker.w_absent_warning = true;
  }
  return ker;
}

BroadcastKernel estimate_kernel_from_revealed(const Graph& g, const SideInfo& side, int k) {
  if (k < 2) throw WrongK("estimate_kernel_from_revealed: k must be >= 2");
  std::vector<long long> rev_count(k, 0);
  long long rev_total = 0;
  for (long long v = 0; v < g.n; ++v) {
    const int p = side.prior[v];
    if (p >= 1 && p <= k) {
      ++rev_count[p - 1];
      ++rev_total;
    }
  }
  if (rev_total == 0) throw EmptyEvaluationSet("estimate_kernel_from_revealed: nothing revealed");

  // block edge counts among revealed nodes
  Mat edges(k, k, 0.0);
  for (long long u = 0; u < g.n; ++u) {
    const int pu = side.prior[u];
    if (pu < 1 || pu > k) continue;
    for (int v : g.adj[u]) {
      if (v <= u) continue;
      const int pv = side.prior[v];
      if (pv < 1 || pv > k) continue;
      edges(pu - 1, pv - 1) += 1.0;
      if (pu != pv) edges(pv - 1, pu - 1) += 1.0;
    }
  }

  Mat Qhat(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      const double pairs = (i == j)
          ? 0.5 * static_cast<double>(rev_count[i]) * static_cast<double>(rev_count[i] - 1)
          : static_cast<double>(rev_count[i]) * static_cast<double>(rev_count[j]);
      const double q = std::min(1.0, (edges(i, j) + 1.0) / (pairs + 1.0));
      Qhat(i, j) = q;
      Qhat(j, i) = q;
    }

  // community sizes scaled up from revealed frequencies
  std::vector<long long> sizes(k, 1);
  long long assigned = 0;
  for (int i = 0; i < k; ++i) {
    sizes[i] = std::max<long long>(
        1, std::llround(static_cast<double>(g.n) * static_cast<double>(rev_count[i]) /
                        static_cast<double>(rev_total)));
    assigned += sizes[i];
  }
  sizes[static_cast<std::size_t>(
      std::max_element(rev_count.begin(), rev_count.end()) - rev_count.begin())] += g.n - assigned;

  return build_kernel(SbmParams(sizes, Qhat));
}

}  // namespace wmp
