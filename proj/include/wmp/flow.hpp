#pragma once
#include <vector>

#include "wmp/tree.hpp"

namespace wmp {

// Unit flow from the root to the boundary at resistance level r (the edge
// into a depth-d node carries resistance r^d). For the minimum-energy flow
// the energy equals the effective resistance of the boundary network.
struct FlowAssignment {
  double r = 1.0;
  std::vector<double> flow;  // i*(~>v) per tree node; zero off the support
  double energy = 0.0;
  double effective_resistance = 0.0;
};

struct FlowScratch {
  std::vector<double> cond;      // 1/R of the subtree hanging below each node
  std::vector<double> split;     // sum of child conductances
  std::vector<char> supported;   // has a boundary descendant (or is boundary)
  std::vector<char> is_boundary;
};

double effective_resistance(const LocalTree& t, double r);

FlowAssignment min_energy_flow(const LocalTree& t, double r);
void min_energy_flow_into(FlowAssignment& f, FlowScratch& ws, const LocalTree& t, double r);

// Equal flow on every boundary node; coincides with the minimum-energy flow
// on regular trees. energy reports the energy of this flow at level r.
FlowAssignment uniform_boundary_flow(const LocalTree& t, double r = 1.0);

// Closed forms for the b-ary regular tree: sum_{d=1..t} (1/(b c))^d and its
// t -> infinity limit 1/(b c - 1), where c is the conductance level.
double regular_tree_energy(long long b, double conductance, long long depth);
double regular_tree_energy_infinite(long long b, double conductance);

}  // namespace wmp
