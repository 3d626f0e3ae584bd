#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "wmp/errors.hpp"
#include "wmp/graph.hpp"

using namespace wmp;
using namespace wmp::testhelp;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = std::string("wmp_test_") + name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

bool graph_invariants_ok(const Graph& g) {
  for (long long u = 0; u < g.n; ++u) {
    std::int32_t prev = -1;
    for (std::int32_t v : g.adj[u]) {
      if (v == u) return false;             // self loop
      if (v <= prev) return false;          // unsorted or duplicate
      if (v < 0 || v >= g.n) return false;  // out of range
      if (!std::binary_search(g.adj[v].begin(), g.adj[v].end(), static_cast<std::int32_t>(u)))
        return false;  // asymmetric
      prev = v;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("degenerate connection probabilities") {
  Mat zero(2, 2, 0.0);
  // a kernel cannot be built from an all-zero Q, but sampling is fine
  zero(0, 0) = zero(1, 1) = zero(0, 1) = zero(1, 0) = 0.0;
  const Graph empty = sample_graph(SbmParams({20, 20}, zero), 5);
  CHECK(empty.edge_count() == 0);

  Mat one(2, 2, 1.0);
  const Graph complete = sample_graph(SbmParams({15, 15}, one), 5);
  CHECK(complete.edge_count() == 30 * 29 / 2);
}

TEST_CASE("block fill assigns labels deterministically") {
  Mat Q(2, 2, 0.0);
  const Graph g = sample_graph(SbmParams({3, 2}, Q), 1);
  CHECK(g.truth == std::vector<int>{1, 1, 1, 2, 2});
}

TEST_CASE("edge count matches the analytic expectation") {
  const long long n = 1000;
  const auto params = balanced_two_block(n, 8.0, 2.0);
  const double expected = 2.0 * (499.0 * 500.0 / 2.0) * (8.0 / n) + 500.0 * 500.0 * (2.0 / n);
  std::vector<double> counts;
  for (int seed = 0; seed < 200; ++seed)
    counts.push_back(static_cast<double>(sample_graph(params, 1000 + seed).edge_count()));
  const auto ms = mean_se(counts);
  CHECK(std::fabs(ms.mean - expected) <= 4.0 * ms.se);
}

TEST_CASE("dense sampler path matches expectation too") {
  // Q above the skip-sampler threshold exercises the keyed Bernoulli path
  Mat Q(2, 2);
  Q(0, 0) = Q(1, 1) = 0.08;
  Q(0, 1) = Q(1, 0) = 0.02;
  const SbmParams params({100, 100}, Q);
  const double expected = 2.0 * (99.0 * 100.0 / 2.0) * 0.08 + 100.0 * 100.0 * 0.02;
  std::vector<double> counts;
  for (int seed = 0; seed < 200; ++seed)
    counts.push_back(static_cast<double>(sample_graph(params, 77 + seed).edge_count()));
  const auto ms = mean_se(counts);
  CHECK(std::fabs(ms.mean - expected) <= 4.0 * ms.se);
}

TEST_CASE("sampling is reproducible and seed-sensitive") {
  const auto params = balanced_two_block(400, 6.0, 2.0);
  const Graph a = sample_graph(params, 11), b = sample_graph(params, 11);
  const Graph c = sample_graph(params, 12);
  CHECK(a.adj == b.adj);
  CHECK(a.adj != c.adj);
}

TEST_CASE("sampled graphs satisfy the structural invariants") {
  Rng rng(31337);
  for (int rep = 0; rep < 20; ++rep) {
    SbmParams params = random_params(rng, 3);
    // shrink: keep runtime modest
    std::vector<long long> sizes;
    for (long long s : params.community_sizes) sizes.push_back(s / 4 + 10);
    const Graph g = sample_graph(SbmParams(std::move(sizes), params.Q), rng.next_u64());
    CHECK(graph_invariants_ok(g));
  }
}

TEST_CASE("noisy side information matches the channel") {
  const int n = 100000;
  SUBCASE("high-accuracy two-label channel") {
    const double delta = 0.999;
    std::vector<int> truth(n, 1);
    for (int i = n / 2; i < n; ++i) truth[i] = 2;
    const SideInfo side = make_side_info(truth, SideInfoMode::noisy(delta), 2, 99);
    double agree = 0;
    for (int i = 0; i < n; ++i) agree += side.prior[i] == truth[i];
    const double p = agree / n;
    const double target = delta + (1 - delta) / 2.0;
    CHECK(std::fabs(p - target) <= 4.0 * binomial_se(target, n));
  }
  SUBCASE("wrong labels are uniform over the alternatives") {
    const double delta = 0.4;
    const int k = 4;
    std::vector<int> truth(n, 3);
    const SideInfo side = make_side_info(truth, SideInfoMode::noisy(delta), k, 123);
    double wrong_each = (1.0 - delta) * (1.0 - 1.0 / k) / (k - 1);
    for (int lab = 1; lab <= k; ++lab) {
      if (lab == 3) continue;
      double freq = 0;
      for (int i = 0; i < n; ++i) freq += side.prior[i] == lab;
      freq /= n;
      CHECK(std::fabs(freq - wrong_each) <= 4.0 * binomial_se(wrong_each, n));
    }
  }
  SUBCASE("partial mode never fabricates a label") {
    std::vector<int> truth(n);
    for (int i = 0; i < n; ++i) truth[i] = 1 + (i % 3);
    const SideInfo side = make_side_info(truth, SideInfoMode::partial(0.3), 3, 5);
    long long revealed = 0;
    for (int i = 0; i < n; ++i) {
      if (side.prior[i] != 0) {
        CHECK(side.prior[i] == truth[i]);
        ++revealed;
      }
    }
    CHECK(std::fabs(revealed / static_cast<double>(n) - 0.3) <= 4.0 * binomial_se(0.3, n));
  }
}

TEST_CASE("edge list loader") {
  SUBCASE("path graph") {
    const auto path = write_temp("edges1.txt", "1 2\n2 3\n");
    const Graph g = load_edge_list(path);
    CHECK(g.n == 3);
    CHECK(g.edge_count() == 2);
    CHECK(g.adj[1].size() == 2);
    std::remove(path.c_str());
  }
  SUBCASE("duplicates and self-loops dropped") {
    const auto path = write_temp("edges2.txt", "1 2\n2 1\n1 1\n");
    const Graph g = load_edge_list(path);
    CHECK(g.n == 2);
    CHECK(g.edge_count() == 1);
    std::remove(path.c_str());
  }
  SUBCASE("comments and arbitrary ids") {
    const auto path = write_temp("edges3.txt", "# header\n10 20 # trailing\n30 10\n");
    const Graph g = load_edge_list(path);
    CHECK(g.n == 3);
    CHECK(g.orig_id == std::vector<long long>{10, 20, 30});
    std::remove(path.c_str());
  }
  SUBCASE("parse errors carry line numbers") {
    const auto path = write_temp("edges4.txt", "1 2\nnonsense\n");
    CHECK_THROWS_AS(load_edge_list(path), ParseError);
    try {
      load_edge_list(path);
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    std::remove(path.c_str());
  }
}

TEST_CASE("gml loader with values and directed duplicate edges") {
  const std::string gml =
      "graph [\n directed 1\n"
      " node [ id 1 value \"left\" ]\n"
      " node [ id 2 value \"right\" ]\n"
      " node [ id 3 value \"left\" ]\n"
      " edge [ source 1 target 2 ]\n"
      " edge [ source 2 target 1 ]\n"
      " edge [ source 2 target 3 ]\n"
      "]\n";
  const auto path = write_temp("g.gml", gml);
  const Graph g = load_gml(path);
  CHECK(g.n == 3);
  CHECK(g.edge_count() == 2);
  CHECK(g.truth == std::vector<int>{1, 2, 1});
  std::remove(path.c_str());
}

TEST_CASE("attach_labels maps ids and rejects unknown nodes") {
  const auto gpath = write_temp("edges5.txt", "5 6\n6 7\n");
  Graph g = load_edge_list(gpath);
  SUBCASE("small integer labels used verbatim") {
    const auto lpath = write_temp("labels1.csv", "5,2\n6,1\n7,2\n");
    attach_labels(g, lpath);
    CHECK(g.truth == std::vector<int>{2, 1, 2});
    std::remove(lpath.c_str());
  }
  SUBCASE("string labels mapped by first appearance") {
    const auto lpath = write_temp("labels2.csv", "5,blue\n6,red\n7,blue\n");
    attach_labels(g, lpath);
    CHECK(g.truth == std::vector<int>{1, 2, 1});
    std::remove(lpath.c_str());
  }
  SUBCASE("unknown node") {
    const auto lpath = write_temp("labels3.csv", "99,1\n");
    CHECK_THROWS_AS(attach_labels(g, lpath), UnknownNode);
    std::remove(lpath.c_str());
  }
  std::remove(gpath.c_str());
}

TEST_CASE("largest component restriction") {
  const auto path = write_temp("edges6.txt", "1 2\n2 3\n10 11\n");
  Graph g = load_edge_list(path);
  const auto lpath = write_temp("labels4.csv", "1,1\n2,1\n3,2\n10,2\n11,2\n");
  attach_labels(g, lpath);
  const Graph big = restrict_to_largest_component(g);
  CHECK(big.n == 3);
  CHECK(big.orig_id == std::vector<long long>{1, 2, 3});
  CHECK(big.truth == std::vector<int>{1, 1, 2});
  std::remove(path.c_str());
  std::remove(lpath.c_str());
}
