#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "wmp/errors.hpp"
#include "wmp/flow.hpp"
#include "wmp/testing.hpp"

using namespace wmp;
using namespace wmp::testhelp;

TEST_CASE("series chain resistance") {
  for (int t = 1; t <= 6; ++t) {
    std::vector<int> parents{-1};
    for (int d = 1; d <= t; ++d) parents.push_back(d - 1);
    const LocalTree chain = make_tree(parents, t);
    CHECK(effective_resistance(chain, 1.0) == doctest::Approx(t).epsilon(1e-12));
    const FlowAssignment f = min_energy_flow(chain, 1.0);
    CHECK(f.energy == doctest::Approx(t).epsilon(1e-12));
    for (double v : f.flow) CHECK(v == doctest::Approx(1.0));
  }
}

TEST_CASE("hand-reduced two-branch network") {
  // root 0; A=1 boundary at depth 1; B=2 with boundary children 3,4
  const LocalTree t = make_tree({-1, 0, 0, 2, 2}, 2, {1, 3, 4});
  CHECK(effective_resistance(t, 1.0) == doctest::Approx(3.0 / 5.0).epsilon(1e-12));
  const FlowAssignment f = min_energy_flow(t, 1.0);
  CHECK(f.flow[1] == doctest::Approx(3.0 / 5.0).epsilon(1e-12));
  CHECK(f.flow[2] == doctest::Approx(2.0 / 5.0).epsilon(1e-12));
  CHECK(f.flow[3] == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
  CHECK(f.flow[4] == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
  CHECK(f.energy == doctest::Approx(3.0 / 5.0).epsilon(1e-12));

  const testing::QpFlow qp = testing::qp_min_energy(t, 1.0);
  CHECK(qp.energy == doctest::Approx(f.energy).epsilon(1e-12));
  for (std::size_t v = 0; v < t.size(); ++v)
    CHECK(qp.flow[v] == doctest::Approx(f.flow[v]).epsilon(1e-10));
}

TEST_CASE("regular trees split the flow evenly") {
  const int b = 3, depth = 4;
  const LocalTree t = make_regular_tree(b, depth);
  for (double r : {0.7, 1.0, 2.5}) {
    const FlowAssignment f = min_energy_flow(t, r);
    double expect = 0.0;
    for (int d = 1; d <= depth; ++d) expect += std::pow(r / b, d);
    CHECK(f.effective_resistance == doctest::Approx(expect).epsilon(1e-12));
    CHECK(f.energy == doctest::Approx(expect).epsilon(1e-12));
    for (std::size_t v = 0; v < t.size(); ++v)
      CHECK(f.flow[v] == doctest::Approx(std::pow(b, -static_cast<double>(t.depth[v]))).epsilon(1e-10));
    // closed form at the matching conductance level
    CHECK(regular_tree_energy(b, 1.0 / r, depth) == doctest::Approx(expect).epsilon(1e-12));
    // equal flow on the boundary is minimal here
    const FlowAssignment u = uniform_boundary_flow(t, r);
    for (std::size_t v = 0; v < t.size(); ++v)
      CHECK(u.flow[v] == doctest::Approx(f.flow[v]).epsilon(1e-12));
  }
}

TEST_CASE("closed-form energies for regular trees") {
  CHECK(regular_tree_energy_infinite(3, 2.0 / 3.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(regular_tree_energy(3, 2.0 / 3.0, 5) == doctest::Approx(1.0 - std::pow(2.0, -5)).epsilon(1e-12));
  CHECK(regular_tree_energy(7, 0.3, 0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(regular_tree_energy_infinite(3, 1.0 / 3.0), DivergentEnergy);
  CHECK_THROWS_AS(regular_tree_energy_infinite(2, 0.5), DivergentEnergy);
  // partial sums approach the limit
  CHECK(regular_tree_energy(3, 2.0 / 3.0, 40) ==
        doctest::Approx(regular_tree_energy_infinite(3, 2.0 / 3.0)).epsilon(1e-6));
}

TEST_CASE("minimum energy flow on random trees") {
  Rng rng(1234);
  for (int rep = 0; rep < 40; ++rep) {
    const LocalTree t = testing::random_tree(rng, 2 + static_cast<int>(rng.next_below(3)),
                                             1.5 + rng.next_double(), 1);
    const double r = 0.5 + 3.5 * rng.next_double();
    const FlowAssignment f = min_energy_flow(t, r);

    std::string why;
    CHECK_MESSAGE(testing::is_valid_unit_flow(t, f.flow, 1e-10, &why), why);
    for (double v : f.flow) CHECK(v >= 0.0);
    CHECK(std::fabs(f.energy - f.effective_resistance) <= 1e-10 * std::max(1.0, f.energy));
    CHECK(std::fabs(f.energy - testing::flow_energy(t, f.flow, r)) <=
          1e-10 * std::max(1.0, f.energy));

    const testing::QpFlow qp = testing::qp_min_energy(t, r);
    CHECK(f.energy == doctest::Approx(qp.energy).epsilon(1e-9));

    for (int p = 0; p < 300; ++p) {
      const auto pert = testing::perturb_unit_flow(t, f.flow, 0.25, rng);
      CHECK(testing::flow_energy(t, pert, r) >= f.energy - 1e-12);
    }
  }
}

TEST_CASE("energy grows with the resistance level") {
  Rng rng(555);
  for (int rep = 0; rep < 10; ++rep) {
    const LocalTree t = testing::random_tree(rng, 3, 2.0, 1);
    double prev = 0.0;
    for (double r = 0.5; r <= 4.01; r += 0.25) {
      const double e = min_energy_flow(t, r).energy;
      CHECK(e >= prev - 1e-12);
      prev = e;
    }
  }
}

TEST_CASE("deep trees switch to log-space safely") {
  // chain of depth 500 with r < 1: r^500 underflows naive powers
  const int depth = 500;
  std::vector<int> parents{-1};
  for (int d = 1; d <= depth; ++d) parents.push_back(d - 1);
  const LocalTree chain = make_tree(parents, depth);
  const double r = std::exp(-1.3);  // depth * |log r| = 650 > 600
  double expect = 0.0;
  for (int d = depth; d >= 1; --d) expect += std::pow(r, d);
  const FlowAssignment f = min_energy_flow(chain, r);
  CHECK(f.energy == doctest::Approx(expect).epsilon(1e-9));
  CHECK(f.effective_resistance == doctest::Approx(expect).epsilon(1e-9));
  CHECK(f.flow[depth] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dead-end branches carry no flow") {
  // root 0 -> {1, 2}; 2 -> {3}; only node 3 reaches the boundary depth
  const LocalTree t = make_tree({-1, 0, 0, 2}, 2);
  REQUIRE(t.boundary == std::vector<std::int32_t>{3});
  const FlowAssignment f = min_energy_flow(t, 1.5);
  CHECK(f.flow[1] == 0.0);
  CHECK(f.flow[2] == doctest::Approx(1.0));
  CHECK(f.flow[3] == doctest::Approx(1.0));
}

TEST_CASE("empty boundary is rejected") {
  LocalTree t = make_tree({-1, 0}, 2);  // depth-1 leaf, cap 2: no boundary
  REQUIRE(t.boundary.empty());
  CHECK_THROWS_AS(min_energy_flow(t, 1.0), EmptyBoundary);
  CHECK_THROWS_AS(effective_resistance(t, 1.0), EmptyBoundary);
  CHECK_THROWS_AS(uniform_boundary_flow(t, 1.0), EmptyBoundary);
}

TEST_CASE("root-as-boundary degenerate case") {
  LocalTree t = make_tree({-1}, 0);
  t.boundary = {0};
  const FlowAssignment f = min_energy_flow(t, 2.0);
  CHECK(f.flow[0] == doctest::Approx(1.0));
  CHECK(f.energy == doctest::Approx(0.0));
  CHECK(f.effective_resistance == doctest::Approx(0.0));
}
