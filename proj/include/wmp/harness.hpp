#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wmp/message_passing.hpp"
#include "wmp/model.hpp"
#include "wmp/stats.hpp"

namespace wmp {

enum class Scenario { gw_tree, sbm, polblogs };
enum class Estimator { wmp, amp_uniform_flow, bp, spectral };

std::string to_string(Scenario s);
std::string to_string(Estimator e);
Scenario scenario_from_string(const std::string& s);
Estimator estimator_from_string(const std::string& s);

struct ExperimentConfig {
  Scenario scenario = Scenario::gw_tree;
  Mat gw_mean;                    // gw_tree: offspring mean matrix
  std::optional<SbmParams> sbm;   // sbm: model parameters
  std::string dataset_path;       // polblogs: empty = $WMP_DATA_DIR/polblogs.gml
  SideInfoKind side_kind = SideInfoKind::noisy;
  PartialTreatment treatment = PartialTreatment::boundary_noisy;
  std::vector<double> deltas;
  std::vector<int> depths;
  long long trials = 1;           // trees per grid point / repetitions
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<Estimator> estimators;
  std::string output_path;        // empty = no file output
  bool json_mirror = false;

  void validate() const;
};

// CSV row schema (fixed header, this field order).
struct ResultRow {
  std::string scenario;
  std::string estimator;
  int depth = 0;
  double delta = 0.0;
  double snr = 0.0;
  std::uint64_t seed = 0;
  double error_rate = 0.0;
  std::string set_err;  // flattened "Sa-Sb:rate" pairs joined by ';'
  double uninformed_rate = 0.0;
  double wall_s = 0.0;
};

struct GwPoint {
  int depth = 0;
  double delta = 0.0;
  Estimator estimator = Estimator::wmp;
  long long trials = 0;
  ErrStats stats;
  double wall_s = 0.0;
};

struct GwSweep {
  BroadcastKernel kernel;
  std::vector<GwPoint> points;
};

// Per trial: sample a Galton-Watson tree to the deepest requested radius
// (root drawn from the stationary distribution of K), reveal labels per the
// side-information mode, run the selected estimators at every depth, and
// accumulate root confusions. Deterministic for a fixed config and seed.
GwSweep gw_monte_carlo(const ExperimentConfig& config);

struct SbmPoint {
  int depth = 0;
  double delta = 0.0;
  Estimator estimator = Estimator::wmp;
  long long trials = 0;  // sampled graphs
  ErrStats stats;        // node-level, pooled over trials
  double wall_s = 0.0;
};

struct SbmSweep {
  BroadcastKernel kernel;
  std::vector<SbmPoint> points;
};

// Full-graph classification on sampled SBM instances (wmp / amp estimators).
SbmSweep sbm_monte_carlo(const ExperimentConfig& config);

struct PolblogsPoint {
  double delta = 0.0;
  int depth = 0;  // 0 for the spectral baseline
  Estimator estimator = Estimator::amp_uniform_flow;
  Vec per_seed_error;    // over unrevealed nodes, uninformed counted wrong
  double median_error = 0.0;
};

struct PolblogsResult {
  long long n_nodes = 0;
  long long n_edges = 0;
  std::vector<PolblogsPoint> points;
};

PolblogsResult polblogs_experiment(const ExperimentConfig& config);

std::string resolve_polblogs_path(const std::string& configured);

// Aggregated rows for serialization.
std::vector<ResultRow> to_rows(const GwSweep& sweep, const ExperimentConfig& config);
std::vector<ResultRow> to_rows(const SbmSweep& sweep, const ExperimentConfig& config);
std::vector<ResultRow> to_rows(const PolblogsResult& res, const ExperimentConfig& config);

// CSV with a fixed header, floats at 6 significant digits; optional JSON
// mirror at path + ".json".
void write_results(const std::string& path, const std::vector<ResultRow>& rows,
                   bool json_mirror = false);
std::vector<ResultRow> read_results_csv(const std::string& path);

std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

// Median of an unsorted sample (even length: mean of the middle pair).
double median(Vec values);

}  // namespace wmp
