#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmp/baselines.hpp"
#include "wmp/errors.hpp"
#include "wmp/flow.hpp"
#include "wmp/graph.hpp"
#include "wmp/harness.hpp"
#include "wmp/message_passing.hpp"
#include "wmp/model.hpp"
#include "wmp/testing.hpp"
#include "wmp/tree.hpp"

namespace {

using namespace wmp;

// "a,b;c,d": commas separate columns, semicolons separate rows
Mat parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream row_stream(text);
  std::string row;
  while (std::getline(row_stream, row, ';')) {
    std::vector<double> vals;
    std::stringstream col_stream(row);
    std::string cell;
    while (std::getline(col_stream, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("bad matrix entry: '" + cell + "'");
      }
    }
    if (!vals.empty()) rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ConfigError("empty matrix");
  Mat m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError("ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<long long> parse_sizes(const std::string& text) {
  std::vector<long long> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stoll(cell));
    } catch (const std::exception&) {
      throw ConfigError("bad community size: '" + cell + "'");
    }
  }
  return out;
}

void print_matrix(const std::string& name, const Mat& m) {
  std::printf("%s =\n", name.c_str());
  for (std::size_t i = 0; i < m.rows; ++i) {
    std::printf("  ");
    for (std::size_t j = 0; j < m.cols; ++j) std::printf("%12.6g", m(i, j));
    std::printf("\n");
  }
}

int cmd_kernel(const std::string& sizes_text, const std::string& q_text) {
  SbmParams params(parse_sizes(sizes_text), parse_matrix(q_text));
  BroadcastKernel ker = build_kernel(params);
  std::printf("n = %lld, k = %d\n", params.n, params.k);
  print_matrix("K", ker.K);
  print_matrix("M", ker.M);
  std::printf("theta  = %.10g\n", ker.theta);
  std::printf("lambda = %.10g\n", ker.lambda);
  std::printf("SNR    = %.10g\n", ker.snr);
  if (params.k == 2) {
    const ThetaBarK2 tb = theta_bar_closed_form_k2(params);
    std::printf("closed form, 1/4 prefactor = %.10g\n", tb.quarter);
    std::printf("closed form, 1/2 prefactor = %.10g (second eigenvalue of K)\n", tb.half);
  }
  if (ker.has_w) {
    std::printf("w = [");
    for (int l = 0; l < ker.k; ++l) std::printf("%s%.8g", l ? ", " : "", ker.w[l]);
    std::printf("]\nequivalence sets:");
    for (const auto& s : ker.equiv_sets) {
      std::printf(" {");
      for (std::size_t i = 0; i < s.size(); ++i) std::printf("%s%d", i ? "," : "", s[i]);
      std::printf("}");
    }
    std::printf("\n");
  } else {
    std::printf("w: not available (K not symmetric within tolerance)\n");
  }
  return 0;
}

int cmd_sample_sbm(const std::string& sizes_text, const std::string& q_text, std::uint64_t seed,
                   const std::string& out_path, const std::string& labels_path) {
  SbmParams params(parse_sizes(sizes_text), parse_matrix(q_text));
  Graph g = sample_graph(params, seed);
  std::FILE* f = std::fopen(out_path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + out_path);
  std::fprintf(f, "# sbm sample n=%lld seed=%llu\n", g.n,
               static_cast<unsigned long long>(seed));
  for (long long u = 0; u < g.n; ++u)
    for (int v : g.adj[u])
      if (v > u) std::fprintf(f, "%lld %d\n", u + 1, v + 1);
  std::fclose(f);
  if (!labels_path.empty()) {
    std::FILE* lf = std::fopen(labels_path.c_str(), "wb");
    if (!lf) throw IoError("cannot open " + labels_path);
    for (long long u = 0; u < g.n; ++u) std::fprintf(lf, "%lld,%d\n", u + 1, g.truth[u]);
    std::fclose(lf);
  }
  std::printf("wrote %lld nodes, %lld edges to %s\n", g.n, g.edge_count(), out_path.c_str());
  return 0;
}

int run_oracle_checks() {
  int checks = 0;
  Rng rng(20240811);

  // minimum-energy flow vs the dense quadratic program, plus validity
  for (int i = 0; i < 60; ++i) {
    LocalTree t = testing::random_tree(rng, 2 + static_cast<int>(rng.next_below(3)),
                                       1.6 + rng.next_double(), 1);
    const double r = 0.5 + 3.5 * rng.next_double();
    FlowAssignment f = min_energy_flow(t, r);
    std::string why;
    if (!testing::is_valid_unit_flow(t, f.flow, 1e-10, &why))
      throw Error("oracle-check: invalid flow: " + why);
    if (std::fabs(f.energy - f.effective_resistance) > 1e-10 * std::max(1.0, f.energy))
      throw Error("oracle-check: energy / resistance mismatch");
    const testing::QpFlow qp = testing::qp_min_energy(t, r);
    if (std::fabs(qp.energy - f.energy) > 1e-8 * std::max(1.0, f.energy))
      throw Error("oracle-check: flow solver disagrees with the quadratic program");
    for (int p = 0; p < 200; ++p) {
      const auto pert = testing::perturb_unit_flow(t, f.flow, 0.2, rng);
      if (testing::flow_energy(t, pert, r) < f.energy - 1e-12)
        throw Error("oracle-check: perturbation beat the minimum-energy flow");
    }
    ++checks;
  }

  // sum-product vs brute-force enumeration
  for (int i = 0; i < 120; ++i) {
    const int k = 2 + static_cast<int>(rng.next_below(2));
    Mat K(k, k);
    for (int a = 0; a < k; ++a) {
      double rs = 0.0;
      for (int b = 0; b < k; ++b) {
        K(a, b) = 0.1 + rng.next_double();
        rs += K(a, b);
      }
      for (int b = 0; b < k; ++b) K(a, b) /= rs;
    }
    LocalTree t = testing::random_tree(rng, 2, 1.3, 1, 1u << 12);
    if (t.size() > 9) continue;
    broadcast_labels_inplace(t, K, 1 + static_cast<int>(rng.next_below(k)), rng.next_u64());
    SideInfoMode mode = SideInfoMode::noisy(0.2 + 0.6 * rng.next_double());
    reveal_priors(t, mode, k, rng.next_u64(), true);
    Vec prior(k, 1.0 / k);
    BpOptions opts;
    opts.root_prior = prior;
    opts.logit_check = BpOptions::LogitCheck::on;
    BpResult bp = bp_classify_root(t, K, mode, opts);
    PosteriorVector oracle = exact_posterior_oracle(t, K, mode.delta, prior);
    for (int l = 0; l < k; ++l)
      if (std::fabs(bp.posterior.p[l] - oracle.p[l]) > 1e-9)
        throw Error("oracle-check: sum-product disagrees with enumeration");
    ++checks;
  }

  // nonlinear update: value, slope, linearization error
  if (std::fabs(f_update(0.3, 0.7, 0.0)) > 1e-15) throw Error("oracle-check: f(0) != 0");
  ++checks;
  {
    const double h = 1e-6;
    const double slope = (f_update(0.3, 0.7, h) - f_update(0.3, 0.7, -h)) / (2 * h);
    if (std::fabs(slope - 0.5) > 1e-6) throw Error("oracle-check: f'(0) mismatch");
    ++checks;
    for (double x = -0.1; x <= 0.1; x += 0.005) {
      if (std::fabs(f_update(0.4, 0.4, x) - 0.4 * x) > x * x / 2.0 + 1e-12)
        throw Error("oracle-check: linearization bound violated");
    }
    ++checks;
  }

  std::printf("all %d checks passed\n", checks);
  return 0;
}

std::vector<Estimator> parse_estimators(const std::vector<std::string>& names) {
  std::vector<Estimator> out;
  for (const auto& n : names) out.push_back(estimator_from_string(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted message passing for block models with side information"};
  app.require_subcommand(1);

  // kernel
  auto* kernel_cmd = app.add_subcommand("kernel", "derived model quantities from (N, Q)");
  std::string sizes_text, q_text;
  kernel_cmd->add_option("--N", sizes_text, "community sizes, comma separated")->required();
  kernel_cmd->add_option("--Q", q_text, "connection probabilities; ',' columns, ';' rows")
      ->required();
  long long n_flag = 0;
  kernel_cmd->add_option("--n", n_flag, "total node count (checked against N if given)");

  // sample-sbm
  auto* sample_cmd = app.add_subcommand("sample-sbm", "draw a graph and write an edge list");
  std::string s_sizes, s_q, s_out = "graph.txt", s_labels;
  std::uint64_t s_seed = 1;
  sample_cmd->add_option("--N", s_sizes)->required();
  sample_cmd->add_option("--Q", s_q)->required();
  sample_cmd->add_option("--seed", s_seed);
  sample_cmd->add_option("--out", s_out, "edge list output path");
  sample_cmd->add_option("--labels-out", s_labels, "node,label csv output path");

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "run message passing on a graph file");
  std::string c_graph, c_gml, c_labels, c_sizes, c_q, c_side = "partial", c_out;
  std::vector<int> c_depths{2};
  double c_delta = 0.1;
  std::uint64_t c_seed = 1;
  int c_threads = 0, c_treatment = 1;
  bool c_uniform = false, c_exclude = true, c_largest = false;
  classify_cmd->add_option("--graph", c_graph, "edge list path");
  classify_cmd->add_option("--gml", c_gml, "gml path (alternative to --graph)");
  classify_cmd->add_option("--labels", c_labels, "node,label csv with ground truth");
  classify_cmd->add_option("--N", c_sizes, "known community sizes (else estimated)");
  classify_cmd->add_option("--Q", c_q, "known connection probabilities (else estimated)");
  classify_cmd->add_option("--side", c_side, "noisy|partial")->check(CLI::IsMember({"noisy", "partial"}));
  classify_cmd->add_option("--delta", c_delta);
  classify_cmd->add_option("--depths", c_depths, "radii to evaluate");
  classify_cmd->add_option("--seed", c_seed);
  classify_cmd->add_option("--threads", c_threads);
  classify_cmd->add_option("--treatment", c_treatment, "partial-label treatment, 1 or 2")
      ->check(CLI::Range(1, 2));
  classify_cmd->add_flag("--uniform-flow", c_uniform, "uniform leaf weights instead of minimum energy");
  classify_cmd->add_flag("--include-revealed", [&c_exclude](std::int64_t) { c_exclude = false; },
                         "score revealed nodes too");
  classify_cmd->add_flag("--largest-component", c_largest);
  classify_cmd->add_option("--out", c_out, "csv output path");

  // gw-sweep
  auto* gw_cmd = app.add_subcommand("gw-sweep", "Monte Carlo over broadcasting trees");
  gw_cmd->set_config("--config", "", "key=value config file");
  std::string g_mean, g_side = "noisy", g_out;
  double g_b = 0.0, g_theta = 0.0;
  std::vector<double> g_deltas;
  std::vector<int> g_depths;
  long long g_trials = 1000;
  std::uint64_t g_seed = 1;
  int g_threads = 0, g_treatment = 1;
  bool g_json = false;
  std::vector<std::string> g_est{"wmp", "bp"};
  gw_cmd->add_option("--mean-matrix", g_mean, "offspring means; ',' columns, ';' rows");
  gw_cmd->add_option("--b", g_b, "two-type shorthand: branching rate");
  gw_cmd->add_option("--theta", g_theta, "two-type shorthand: kernel second eigenvalue");
  gw_cmd->add_option("--side", g_side)->check(CLI::IsMember({"noisy", "partial"}));
  gw_cmd->add_option("--deltas", g_deltas)->required();
  gw_cmd->add_option("--depths", g_depths)->required();
  gw_cmd->add_option("--trials", g_trials);
  gw_cmd->add_option("--seed", g_seed);
  gw_cmd->add_option("--threads", g_threads);
  gw_cmd->add_option("--treatment", g_treatment)->check(CLI::Range(1, 2));
  gw_cmd->add_option("--estimators", g_est);
  gw_cmd->add_option("--out", g_out);
  gw_cmd->add_flag("--json", g_json, "also write a json mirror");

  // polblogs
  auto* pol_cmd = app.add_subcommand("polblogs", "replicate the blog-network experiment");
  pol_cmd->set_config("--config", "", "key=value config file");
  std::string p_data, p_out;
  std::vector<double> p_deltas{0.1, 0.05, 0.025};
  std::vector<int> p_depths{1, 2, 3, 4, 5};
  long long p_reps = 50;
  std::uint64_t p_seed = 1;
  int p_threads = 0;
  bool p_json = false;
  std::vector<std::string> p_est{"amp", "spectral"};
  pol_cmd->add_option("--data", p_data, "path to polblogs.gml (default $WMP_DATA_DIR)");
  pol_cmd->add_option("--deltas", p_deltas);
  pol_cmd->add_option("--depths", p_depths);
  pol_cmd->add_option("--trials", p_reps, "repetitions per delta");
  pol_cmd->add_option("--seed", p_seed);
  pol_cmd->add_option("--threads", p_threads);
  pol_cmd->add_option("--estimators", p_est);
  pol_cmd->add_option("--out", p_out);
  pol_cmd->add_flag("--json", p_json);

  // oracle-check
  app.add_subcommand("oracle-check", "self-test against independent oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (kernel_cmd->parsed()) {
      if (n_flag > 0) {
        const auto sizes = parse_sizes(sizes_text);
        long long total = 0;
        for (long long s : sizes) total += s;
        if (total != n_flag) throw ConfigError("--n disagrees with the sum of --N");
      }
      return cmd_kernel(sizes_text, q_text);
    }
    if (sample_cmd->parsed()) return cmd_sample_sbm(s_sizes, s_q, s_seed, s_out, s_labels);
    if (app.get_subcommand("oracle-check")->parsed()) return run_oracle_checks();

    if (classify_cmd->parsed()) {
      if (c_graph.empty() == c_gml.empty())
        throw ConfigError("classify: provide exactly one of --graph / --gml");
      Graph g = c_graph.empty() ? load_gml(c_gml) : load_edge_list(c_graph);
      if (!c_labels.empty()) attach_labels(g, c_labels);
      if (c_largest) g = restrict_to_largest_component(g);
      if (!g.has_truth()) throw ConfigError("classify: ground-truth labels required");
      int k = 0;
      for (int l : g.truth) k = std::max(k, l);

      const SideInfoMode mode = c_side == "noisy" ? SideInfoMode::noisy(c_delta)
                                                  : SideInfoMode::partial(c_delta);
      const SideInfo side = make_side_info(g.truth, mode, k, c_seed);
      BroadcastKernel kernel;
      if (!c_sizes.empty() && !c_q.empty()) {
        kernel = build_kernel(SbmParams(parse_sizes(c_sizes), parse_matrix(c_q)));
      } else {
        kernel = estimate_kernel_from_revealed(g, side, k);
        std::printf("estimated kernel: theta = %.6g, lambda = %.6g, snr = %.6g\n", kernel.theta,
                    kernel.lambda, kernel.snr);
      }
      ClassifyOptions opts;
      opts.depths = c_depths;
      opts.uniform_flow = c_uniform;
      opts.exclude_revealed = c_exclude;
      opts.treatment =
          c_treatment == 2 ? PartialTreatment::all_revealed : PartialTreatment::boundary_noisy;
      opts.threads = c_threads;
      const auto results = wmp_classify_graph(g, side, kernel, opts);
      std::vector<ResultRow> rows;
      for (const auto& res : results) {
        std::printf("depth %d: error %.4f  (uninformed %.4f, evaluated %lld)\n", res.depth,
                    res.stats.error_rate,
                    static_cast<double>(res.stats.n_uninformed) / std::max(1LL, res.stats.n_eval),
                    res.stats.n_eval);
        ResultRow row;
        row.scenario = "classify";
        row.estimator = c_uniform ? "amp_uniform_flow" : "wmp";
        row.depth = res.depth;
        row.delta = c_delta;
        row.snr = kernel.snr;
        row.seed = c_seed;
        row.error_rate = res.stats.error_rate;
        row.uninformed_rate =
            static_cast<double>(res.stats.n_uninformed) / std::max(1LL, res.stats.n_eval);
        rows.push_back(std::move(row));
      }
      if (!c_out.empty()) write_results(c_out, rows);
      return 0;
    }

    if (gw_cmd->parsed()) {
      ExperimentConfig cfg;
      cfg.scenario = Scenario::gw_tree;
      if (!g_mean.empty()) {
        cfg.gw_mean = parse_matrix(g_mean);
      } else if (g_b > 0.0 && g_theta != 0.0) {
        cfg.gw_mean = Mat(2, 2);
        cfg.gw_mean(0, 0) = cfg.gw_mean(1, 1) = g_b * (1.0 + g_theta) / 2.0;
        cfg.gw_mean(0, 1) = cfg.gw_mean(1, 0) = g_b * (1.0 - g_theta) / 2.0;
      } else {
        throw ConfigError("gw-sweep: provide --mean-matrix or the --b/--theta shorthand");
      }
      cfg.side_kind = g_side == "noisy" ? SideInfoKind::noisy : SideInfoKind::partial;
      cfg.treatment =
          g_treatment == 2 ? PartialTreatment::all_revealed : PartialTreatment::boundary_noisy;
      cfg.deltas = g_deltas;
      cfg.depths = g_depths;
      cfg.trials = g_trials;
      cfg.seed = g_seed;
      cfg.threads = g_threads;
      cfg.estimators = parse_estimators(g_est);
      cfg.output_path = g_out;
      cfg.json_mirror = g_json;
      const auto rows = run_experiment(cfg);
      for (const auto& r : rows)
        std::printf("%s delta=%.4g depth=%d: error %.4f (uninformed %.4f)\n", r.estimator.c_str(),
                    r.delta, r.depth, r.error_rate, r.uninformed_rate);
      return 0;
    }

    if (pol_cmd->parsed()) {
      ExperimentConfig cfg;
      cfg.scenario = Scenario::polblogs;
      cfg.side_kind = SideInfoKind::partial;
      cfg.dataset_path = p_data;
      cfg.deltas = p_deltas;
      cfg.depths = p_depths;
      cfg.trials = p_reps;
      cfg.seed = p_seed;
      cfg.threads = p_threads;
      cfg.estimators = parse_estimators(p_est);
      cfg.output_path = p_out;
      cfg.json_mirror = p_json;
      const auto rows = run_experiment(cfg);
      for (const auto& r : rows) {
        if (r.estimator == "spectral")
          std::printf("delta=%.4g spectral: median error %.4f\n", r.delta, r.error_rate);
        else
          std::printf("delta=%.4g %s depth %d: median error %.4f\n", r.delta, r.estimator.c_str(),
                      r.depth, r.error_rate);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
