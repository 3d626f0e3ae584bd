#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "wmp/baselines.hpp"
#include "wmp/errors.hpp"
#include "wmp/graph.hpp"
#include "wmp/harness.hpp"
#include "wmp/stats.hpp"
#include "wmp/testing.hpp"

using namespace wmp;
using namespace wmp::testhelp;

TEST_CASE("nonlinear update function") {
  CHECK(f_update(0.3, 0.8, 0.0) == doctest::Approx(0.0).scale(1.0));

  // slope at zero
  const double h = 1e-6;
  const double slope = (f_update(0.3, 0.8, h) - f_update(0.3, 0.8, -h)) / (2 * h);
  CHECK(std::fabs(slope - 0.55) < 1e-6);

  // value frozen from a long-double evaluation of the formula
  const long double t = std::tanh(1.0L);
  const long double ref = std::log((1.0L + 0.5L * t) / (1.0L - 0.5L * t));
  CHECK(f_update(0.5, 0.5, 2.0) == doctest::Approx(0.8019831628540138).epsilon(1e-12));
  CHECK(f_update(0.5, 0.5, 2.0) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-14));

  // saturation far in the tails
  CHECK(f_update(0.4, 0.7, 100.0) == doctest::Approx(std::log(1.4 / 0.3)).epsilon(1e-12));
  CHECK(f_update(0.4, 0.7, -100.0) == doctest::Approx(std::log(0.6 / 1.7)).epsilon(1e-12));

  CHECK_THROWS_AS(f_update(0.0, 0.5, 1.0), DomainError);
  CHECK_THROWS_AS(f_update(0.5, 1.0, 1.0), DomainError);

  // linearization error around zero
  for (double x = -0.1; x <= 0.1001; x += 0.004)
    CHECK(std::fabs(f_update(0.4, 0.4, x) - 0.4 * x) <= x * x / 2.0 + 1e-12);
}

TEST_CASE("single bayes update on a star") {
  // root with two leaves observed '+' under the noisy channel
  LocalTree t = make_tree({-1, 0, 0}, 1);
  t.prior = {0, 1, 1};
  Mat K(2, 2);
  const double theta = 0.6;
  K(0, 0) = K(1, 1) = (1 + theta) / 2;
  K(0, 1) = K(1, 0) = (1 - theta) / 2;
  const double delta = 0.4;
  const Vec prior = {0.5, 0.5};

  BpOptions opts;
  opts.root_prior = prior;
  opts.logit_check = BpOptions::LogitCheck::on;
  const BpResult bp = bp_classify_root(t, K, SideInfoMode::noisy(delta), opts);

  // hand-expanded product over the two leaves
  const double e_plus = delta + (1 - delta) / 2, e_minus = (1 - delta) / 2;
  auto lh = [&](int root) {
    double p = 0.5;
    for (int leaf = 0; leaf < 2; ++leaf) {
      (void)leaf;
      double s = 0.0;
      for (int l = 0; l < 2; ++l) s += K(root, l) * (l == 0 ? e_plus : e_minus);
      p *= s;
    }
    return p;
  };
  const double z = lh(0) + lh(1);
  CHECK(bp.posterior.p[0] == doctest::Approx(lh(0) / z).epsilon(1e-12));
  CHECK(bp.logit_checked);
  CHECK(bp.logit_gap <= 1e-12);
}

TEST_CASE("uninformative evidence returns the root prior") {
  LocalTree t = make_tree({-1, 0, 0, 1}, 2);
  t.prior = {0, 0, 0, 2};
  Mat K(2, 2);
  K(0, 0) = K(1, 1) = 0.7;
  K(0, 1) = K(1, 0) = 0.3;
  BpOptions opts;
  opts.root_prior = {0.8, 0.2};
  const BpResult bp = bp_classify_root(t, K, SideInfoMode::noisy(1e-12), opts);
  CHECK(bp.posterior.p[0] == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("posterior is exchangeable in the children") {
  Mat K(2, 2);
  K(0, 0) = K(1, 1) = 0.85;
  K(0, 1) = K(1, 0) = 0.15;
  // same logical tree, two child orders
  LocalTree a = make_tree({-1, 0, 0, 1}, 2);
  a.prior = {0, 2, 1, 1};  // children of root: subtree(prior 2, child prior 1), leaf prior 1
  LocalTree b = make_tree({-1, 0, 0, 2}, 2);
  b.prior = {0, 1, 2, 1};
  const SideInfoMode mode = SideInfoMode::noisy(0.3);
  const BpResult ra = bp_classify_root(a, K, mode);
  const BpResult rb = bp_classify_root(b, K, mode);
  CHECK(ra.posterior.p[0] == doctest::Approx(rb.posterior.p[0]).epsilon(1e-12));
}

TEST_CASE("enumeration oracle basics") {
  Mat K(2, 2);
  K(0, 0) = K(1, 1) = 0.7;
  K(0, 1) = K(1, 0) = 0.3;
  SUBCASE("single node without evidence") {
    LocalTree t = make_tree({-1}, 0, {0});
    const PosteriorVector p = exact_posterior_oracle(t, K, 0.4, {0.65, 0.35});
    CHECK(p.p[0] == doctest::Approx(0.65).epsilon(1e-12));
  }
  SUBCASE("two observed leaves match the closed form") {
    LocalTree t = make_tree({-1, 0, 0}, 1);
    t.prior = {0, 1, 2};
    const double delta = 0.25;
    const PosteriorVector p = exact_posterior_oracle(t, K, delta, {0.5, 0.5});
    const double ep = delta + (1 - delta) / 2, em = (1 - delta) / 2;
    auto lh = [&](int root) {
      const double s1 = K(root, 0) * ep + K(root, 1) * em;   // leaf observed '+'
      const double s2 = K(root, 0) * em + K(root, 1) * ep;   // leaf observed '-'
      return 0.5 * s1 * s2;
    };
    CHECK(p.p[0] == doctest::Approx(lh(0) / (lh(0) + lh(1))).epsilon(1e-12));
  }
  SUBCASE("size cap enforced") {
    const LocalTree t = make_regular_tree(2, 4);  // 31 nodes
    CHECK_THROWS_AS(exact_posterior_oracle(t, K, 0.3, {0.5, 0.5}), TooLarge);
  }
}

TEST_CASE("sum-product agrees with enumeration on random trees") {
  Rng rng(13579);
  int done = 0;
  while (done < 120) {
    const int k = 2 + static_cast<int>(rng.next_below(2));
    Mat K(k, k);
    for (int i = 0; i < k; ++i) {
      double rs = 0.0;
      for (int j = 0; j < k; ++j) {
        K(i, j) = 0.05 + rng.next_double();
        rs += K(i, j);
      }
      for (int j = 0; j < k; ++j) K(i, j) /= rs;
    }
    LocalTree t = testing::random_tree(rng, 2, 1.4, 1, 1u << 10);
    if (t.size() > (k == 3 ? 8 : 12)) continue;
    broadcast_labels_inplace(t, K, 1 + static_cast<int>(rng.next_below(k)), rng.next_u64());
    const SideInfoMode mode = SideInfoMode::noisy(0.15 + 0.7 * rng.next_double());
    reveal_priors(t, mode, k, rng.next_u64(), true);

    Vec prior(k);
    double z = 0.0;
    for (int l = 0; l < k; ++l) z += prior[l] = 0.2 + rng.next_double();
    for (auto& v : prior) v /= z;

    BpOptions opts;
    opts.root_prior = prior;
    opts.logit_check = BpOptions::LogitCheck::on;
    const BpResult bp = bp_classify_root(t, K, mode, opts);
    const PosteriorVector oracle = exact_posterior_oracle(t, K, mode.delta, prior);
    for (int l = 0; l < k; ++l)
      CHECK(bp.posterior.p[l] == doctest::Approx(oracle.p[l]).epsilon(1e-9).scale(1.0));
    double sum = 0.0;
    for (double v : bp.posterior.p) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    ++done;
  }
}

TEST_CASE("spectral split of two cliques with revealed anchors") {
  // cliques {0..9} and {10..17}; one revealed node inside each
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < 10; ++u)
    for (int v = u + 1; v < 10; ++v) edges.emplace_back(u, v);
  for (int u = 10; u < 18; ++u)
    for (int v = u + 1; v < 18; ++v) edges.emplace_back(u, v);
  Graph g;
  g.n = 18;
  g.adj.assign(g.n, {});
  g.truth.assign(g.n, 2);
  for (int v = 0; v < 10; ++v) g.truth[v] = 1;
  g.orig_id.resize(g.n);
  for (long long v = 0; v < g.n; ++v) g.orig_id[v] = v + 1;
  for (auto [u, v] : edges) {
    g.adj[u].push_back(v);
    g.adj[v].push_back(u);
  }
  for (auto& a : g.adj) std::sort(a.begin(), a.end());

  SideInfo side;
  side.mode = SideInfoMode::partial(0.1);
  side.prior.assign(g.n, 0);
  side.prior[0] = 1;
  side.prior[10] = 2;

  const auto labels = spectral_partition(g, side);
  for (int v = 0; v < 10; ++v) CHECK(labels[v] == 1);
  for (int v = 10; v < 18; ++v) CHECK(labels[v] == 2);
}

TEST_CASE("spectral baseline beats guessing on a planted model") {
  std::vector<double> errors;
  for (int seed = 0; seed < 20; ++seed) {
    const auto params = balanced_two_block(2000, 12, 3);
    const Graph g = sample_graph(params, 5000 + seed);
    const SideInfo side = make_side_info(g.truth, SideInfoMode::partial(0.05), 2, 41 + seed);
    const auto labels = spectral_partition(g, side);
    std::vector<char> eval(g.n, 0);
    for (long long v = 0; v < g.n; ++v) eval[v] = side.prior[v] == 0;
    errors.push_back(misclassification_stats(labels, g.truth, 2, {{1}, {2}}, eval).error_rate);
  }
  CHECK(median(errors) < 0.2);
}

TEST_CASE("spectral baseline rejects bad inputs") {
  Graph g;
  g.n = 4;
  g.adj.assign(4, {});
  g.truth = {1, 2, 1, 2};
  g.orig_id = {1, 2, 3, 4};
  SideInfo noisy_side;
  noisy_side.mode = SideInfoMode::noisy(0.5);
  noisy_side.prior = {1, 2, 1, 2};
  CHECK_THROWS_AS(spectral_partition(g, noisy_side), InvalidParams);
  SideInfo bad_k;
  bad_k.mode = SideInfoMode::partial(0.5);
  bad_k.prior = {1, 3, 0, 0};
  CHECK_THROWS_AS(spectral_partition(g, bad_k), WrongK);
}
