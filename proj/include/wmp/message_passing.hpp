#pragma once
#include <cstdint>
#include <vector>

#include "wmp/flow.hpp"
#include "wmp/model.hpp"
#include "wmp/stats.hpp"
#include "wmp/tree.hpp"

namespace wmp {

// Partial-label handling at initialization:
//   boundary_noisy: depth-cap labels treated as a noisy layer; unrevealed
//                   boundary nodes contribute a zero message.
//   all_revealed:   every revealed node is a sink; the boundary is the
//                   revealed cutset closest to the root.
enum class PartialTreatment { boundary_noisy, all_revealed };

struct InitOptions {
  PartialTreatment treatment = PartialTreatment::boundary_noisy;
  bool rescale = true;  // per-layer rescale by max(1, max|msg|)
  Vec w_override;       // label weights; default [+1,-1] for k=2, kernel.w otherwise
};

// Message and moment state over one tree. Stored values carry a per-layer
// divisor (layer_log_div) so that theta^{-2|u|} growth never overflows;
// classification only compares root-layer values, which share one scale.
struct MessageState {
  const LocalTree* tree = nullptr;
  int k = 0;
  double theta = 0.0;
  double delta_eff = 0.0;
  bool rescale = true;
  Mat K;
  Vec w;
  Vec community_sizes;            // tie-break order for classify_root
  std::vector<double> msg;        // per node
  std::vector<double> mu;         // k per node, [v*k + l]
  std::vector<double> sigma2;     // per node
  std::vector<char> is_init;      // fixed initialization sites (empty when contiguous)
  bool init_contiguous = false;   // sites are exactly the deepest layer
  bool lazy_boundary = false;     // boundary moments derived from msg on demand
  std::int32_t init_lo = 0;
  int frontier = 0;               // deepest layer not yet recomputed
  double premul_log_div = 0.0;        // theta^{2 deepest} initialization premultiplier
  std::vector<double> layer_log_div;  // log of the per-layer rescale divisors

  // With sign weights and noisy labels the boundary moments are exact
  // functions of the boundary message (mu = delta |m| w, sigma2 = m^2), so
  // the arrays skip that layer; read moments through these.
  double mu_at(std::size_t v, int label) const;  // label in 1..k
  double sigma2_at(std::size_t v) const;

  double log_divisor_at(int layer) const;  // cumulative log F(layer)
  double unscaled_msg(std::size_t v) const;
  double unscaled_mu(std::size_t v, int label) const;
};

// Boundary initialization (messages and moment parameters):
//   msg(u)    = theta^{-2|u|} i*(u) w[prior(u)]
//   mu(u, l)  = delta_eff theta^{-2|u|} i*(u) w[l]
//   sigma2(u) = (theta^{-2|u|} i*(u) max_gap(w) / 2)^2
// delta_eff is delta for noisy labels and for partial treatment (1); exact
// revealed labels under treatment (2) use delta_eff = 1 and sigma2 = 0.
MessageState init_messages(const LocalTree& tree, const SideInfoMode& mode,
                           const FlowAssignment& flow, const BroadcastKernel& kernel,
                           const InitOptions& opts = {});
void init_messages_into(MessageState& st, const LocalTree& tree, const SideInfoMode& mode,
                        const FlowAssignment& flow, const BroadcastKernel& kernel,
                        const InitOptions& opts = {});

// One layer of the linear recursion msg(u) = sum_children theta * msg(v),
// with the matching moment updates; returns false once the root is done.
bool propagate(MessageState& st);
void propagate_to_root(MessageState& st);

struct ClassifyOutcome {
  int label = 0;
  double margin = 0.0;  // gap between the best and second-best center
  bool tie = false;
  bool sign_mismatch = false;  // k=2: argmin-over-centers vs sign rule
};
ClassifyOutcome classify_root(const MessageState& st);

// Moment recursion alone, from explicit initial parameters. When eigen-form
// inputs are supplied (flow, delta, w) every computed mean vector is checked
// against delta * theta^{-2|v|} i*(v) w.
struct EvolveResult {
  Vec mu_root;
  double sigma2_root = 0.0;
  double log_divisor = 0.0;  // stored root values = true values / exp(log_divisor)
  bool closed_form_checked = false;
  long long closed_form_violations = 0;
};
EvolveResult evolve_moments(const LocalTree& tree, const Mat& K, double theta,
                            const std::vector<Vec>& mu0, const Vec& sigma2_0,
                            const std::vector<std::int32_t>& init_nodes, bool rescale = true,
                            const FlowAssignment* eigen_flow = nullptr, double eigen_delta = 0.0,
                            const Vec* eigen_w = nullptr);

struct ClassifyOptions {
  std::vector<int> depths;  // evaluated radii, ascending
  bool uniform_flow = false;
  PartialTreatment treatment = PartialTreatment::boundary_noisy;
  bool all_leaves_boundary = false;
  bool exclude_revealed = false;
  int threads = 1;
};

struct ClassificationResult {
  int depth = 0;
  std::vector<int> pred;
  std::vector<double> margin;
  std::vector<char> tie;
  std::vector<char> uninformed;
  std::vector<char> evaluated;
  long long sign_mismatch = 0;
  bool has_stats = false;
  ErrStats stats;  // vs graph truth when present
};

// Full pipeline for every node of a graph: open the BFS neighborhood,
// compute the minimum-energy flow at conductance theta^2, initialize,
// propagate, classify. Nodes without usable boundary labels fall back to
// their own prior (then to the largest community) and are flagged
// uninformed; uninformed nodes count as errors in the reported stats.
std::vector<ClassificationResult> wmp_classify_graph(const Graph& g, const SideInfo& side,
                                                     const BroadcastKernel& kernel,
                                                     const ClassifyOptions& opts);

}  // namespace wmp
